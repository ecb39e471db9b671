mod support;

use cif_core::flow::{FlowArch, FlowModel, HeadInit, LeafKind};
use cif_core::graph::{Bindings, Graph};
use cif_core::rng::{seeded, standard_normal};
use cif_core::tensor::Tensor;
use cif_core::train::{BatchItem, DescriptorWeighting, JointObjective};
use support::{check_gradients, joint_loss, point_loss, Params};

fn shrunken(cond: usize, head: HeadInit, seed: u64) -> (FlowModel, FlowModel) {
    let mut rng = seeded(seed);
    let f_arch = FlowArch { segments: 2, cond_dim: cond, ..FlowArch::point_flow(8) };
    let g_arch = FlowArch { dim: cond, split: cond / 2, segments: 2, ..FlowArch::embedding_flow(8) };
    let f = FlowModel::new(f_arch, "f", head, &mut rng).unwrap();
    let g = FlowModel::new(g_arch, "g", head, &mut rng).unwrap();
    (f, g)
}

#[test]
fn joint_loss_gradient_matches_central_differences() {
    for (seed, weighting) in [(1, DescriptorWeighting::PerCloud), (2, DescriptorWeighting::PerPoint)] {
        let (f, g) = shrunken(6, HeadInit::Random(0.1), seed);
        let mut rng = seeded(seed + 100);
        let item = BatchItem {
            cloud_id: "c".into(),
            points: Tensor::matrix(3, 3, standard_normal(&mut rng, 9)).unwrap(),
            descriptor: Tensor::matrix(1, 6, standard_normal(&mut rng, 6)).unwrap(),
        };
        let obj = JointObjective::new(&f, &g, weighting).unwrap();
        let scalars = obj.scalars(&item).unwrap();
        let grads = obj.graph().backward(&obj.bindings(&f, &g, &item, &scalars), obj.loss_node()).unwrap().grads;
        let gw = scalars.1.item().unwrap();
        let p = Params::of(&[&f, &g]);
        let worst = check_gradients(&p, &grads, 1e-6, |q| joint_loss(q, &f, &g, &item.points, &item.descriptor, gw));
        assert_eq!(worst.checked, f.param_count() + g.param_count());
        assert!(worst.rel < 1e-4, "{} {} vs {} ({})", worst.coord, worst.analytic, worst.numeric, worst.rel);
    }
}

#[test]
fn ten_block_flow_gradient_matches_central_differences() {
    let mut rng = seeded(10);
    let arch = FlowArch { segments: 10, blocks_per_segment: 1, hidden: 4, cond_dim: 3, ..FlowArch::point_flow(4) };
    let f = FlowModel::new(arch, "f", HeadInit::Random(0.1), &mut rng).unwrap();
    let x = Tensor::matrix(2, 3, standard_normal(&mut rng, 6)).unwrap();
    let e = Tensor::matrix(1, 3, standard_normal(&mut rng, 3)).unwrap();
    let mut g = Graph::new();
    let xn = g.input("x").unwrap();
    let en = g.input("e").unwrap();
    let (z, ld) = f.build_forward(&mut g, xn, Some(en), LeafKind::Param).unwrap();
    let zz = g.mul(z, z);
    let s = g.sum(zz);
    let q = g.scale(s, 0.5);
    let loss = g.sub(q, ld);
    let mut b = Bindings::new();
    f.bind(&mut b);
    b.insert("x", &x).insert("e", &e);
    let grads = g.backward(&b, loss).unwrap().grads;
    let worst = check_gradients(&Params::of(&[&f]), &grads, 1e-6, |p| point_loss(p, &f, &x, &e));
    assert!(worst.rel < 1e-5, "{} {} vs {} ({})", worst.coord, worst.analytic, worst.numeric, worst.rel);
}
