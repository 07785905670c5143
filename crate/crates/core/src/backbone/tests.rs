use super::*;
use crate::fa::FaError;
use crate::fa::{fa_equivariant, fa_invariant, Averaging, FaWrapper, Model};
use crate::frame::{
    graph_sort_frame, pca_frame, PcaFrameBuilder, DEFAULT_EPS_EIG, DEFAULT_EPS_SPEC, DEFAULT_MAX_ENUMERATION,
};
use crate::graphio::Graph;
use crate::group::{Action, EuclideanMotion, GroupKind, NodeAction, OutputAction, PointCloud, Representation};
use crate::numeric::{dot, DEFAULT_TAU_LEX};

fn random_adjacency(rng: &mut Rng, n: usize) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.uniform() < 0.6 {
                let v = rng.uniform_range(0.5, 1.5);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
    }
    a
}

fn randomized(backbone: &Backbone, rng: &mut Rng) -> ParamVector {
    let mut p = backbone.init_params(rng);
    p.as_mut_slice().iter_mut().for_each(|v| *v += 0.1 * rng.normal());
    p
}

#[test]
fn zero_mlp_gives_zero() {
    let mlp = Backbone::mlp(&[6, 8, 3], Activation::Relu).unwrap();
    let y = mlp_forward(&mlp, &mlp.zero_params(), &[1.0, -2.0, 3.0, 0.5, 0.0, 1.0]).unwrap();
    assert_eq!(y, vec![0.0; 3]);
}

#[test]
fn identity_layer_is_affine() {
    let mut rng = Rng::new(90);
    let lin = Backbone::mlp(&[4, 3], Activation::Relu).unwrap();
    let p = randomized(&lin, &mut rng);
    let x = rng.normal_vec(4);
    let y = mlp_forward(&lin, &p, &x).unwrap();
    for (k, yk) in y.iter().enumerate() {
        let expected: f64 = (0..4).map(|i| x[i] * p.as_slice()[i * 3 + k]).sum::<f64>() + p.as_slice()[12 + k];
        assert!((yk - expected).abs() <= 1e-14);
    }
}

#[test]
fn width_chain_is_validated() {
    let bad = vec![
        LayerSpec::new(LayerKind::SharedDense, 3, 4, Activation::Relu),
        LayerSpec::new(LayerKind::SharedDense, 5, 2, Activation::Relu),
    ];
    assert!(matches!(Backbone::new(bad, Symmetry::None), Err(BackboneError::WidthMismatch { layer: 1, .. })));
    let pool = vec![LayerSpec::new(LayerKind::MaxPoolConcat, 3, 3, Activation::Identity)];
    assert!(Backbone::new(pool, Symmetry::None).is_err());
    let zero = vec![LayerSpec::new(LayerKind::SharedDense, 0, 2, Activation::Relu)];
    assert_eq!(Backbone::new(zero, Symmetry::None), Err(BackboneError::ZeroWidth { layer: 0 }));
}

#[test]
fn symmetry_tags_are_verified() {
    // per-row output is equivariant, not invariant
    let rows = vec![LayerSpec::new(LayerKind::SharedDense, 3, 2, Activation::Relu)];
    assert!(Backbone::new(rows.clone(), Symmetry::SnEquivariant).is_ok());
    assert!(matches!(Backbone::new(rows, Symmetry::SnInvariant), Err(BackboneError::SymmetryViolated { .. })));
    let pooled = vec![
        LayerSpec::new(LayerKind::SharedDense, 3, 4, Activation::Relu),
        LayerSpec::new(LayerKind::SumReadout, 4, 4, Activation::Identity),
    ];
    assert!(Backbone::new(pooled, Symmetry::SnInvariant).is_ok());
    let flat = vec![LayerSpec::new(LayerKind::Dense, 15, 2, Activation::Relu)];
    assert!(Backbone::new(flat, Symmetry::SnInvariant).is_err());
}

#[test]
fn mlp_gradients_match_finite_differences() {
    let mut rng = Rng::new(91);
    let lin = Backbone::mlp(&[5, 3], Activation::Relu).unwrap();
    let p = randomized(&lin, &mut rng);
    let x = BackboneInput::new(Matrix::from_rows(&[rng.normal_vec(5)]));
    let r = grad_check(&lin, &p, &x, 1e-5).unwrap();
    assert!(r.passes(1e-9) && r.rejected == 0, "{r:?}");

    let mlp = Backbone::mlp(&[6, 16, 4], Activation::Relu).unwrap();
    for _ in 0..5 {
        let p = randomized(&mlp, &mut rng);
        let x = BackboneInput::new(rng.normal_matrix(2, 3));
        let r = grad_check(&mlp, &p, &x, 1e-5).unwrap();
        assert!(r.passes(1e-5), "{r:?}");
    }
    let g = mlp_grad(&mlp, &mlp.zero_params(), &[1.0; 6], &[1.0; 4]).unwrap();
    assert_eq!(g.len(), mlp.param_count());
}

#[test]
fn setnet_properties() {
    let mut rng = Rng::new(92);
    let net = Backbone::setnet(3, 8, 2).unwrap();
    let p = randomized(&net, &mut rng);
    // one point: the pooled half equals the pointwise half
    let single = rng.normal_matrix(1, 3);
    let trace = layers::forward(&net, p.as_slice(), &BackboneInput::new(single.clone())).unwrap();
    assert_eq!(trace.output.rows(), 1);
    let pool_only = Backbone::new(
        vec![
            LayerSpec::new(LayerKind::SharedDense, 3, 8, Activation::Relu),
            LayerSpec::new(LayerKind::MaxPoolConcat, 8, 16, Activation::Identity),
        ],
        Symmetry::SnEquivariant,
    )
    .unwrap();
    let pp = ParamVector::from_vec(pool_only.specs(), p.layer(0).to_vec()).unwrap();
    let h = setnet_forward(&pool_only, &pp, &single).unwrap();
    assert_eq!(&h.row(0)[..8], &h.row(0)[8..]);

    let x = rng.normal_matrix(6, 3);
    let y = setnet_forward(&net, &p, &x).unwrap();
    for _ in 0..20 {
        let perm = Permutation::new(rng.permutation_map(6)).unwrap();
        let moved = setnet_forward(&net, &p, &perm.permute_rows(&x).unwrap()).unwrap();
        assert_eq!(moved, perm.permute_rows(&y).unwrap());
    }
    // duplicating a point duplicates its output row
    let mut dup = Matrix::zeros(7, 3);
    for i in 0..6 {
        dup.row_mut(i).copy_from_slice(x.row(i));
    }
    dup.row_mut(6).copy_from_slice(x.row(2));
    let yd = setnet_forward(&net, &p, &dup).unwrap();
    assert_eq!(yd.row(6), yd.row(2));
    let r = grad_check(&net, &p, &BackboneInput::new(x), 1e-5).unwrap();
    assert!(r.passes(1e-5), "{r:?}");
}

/// One-unit message passing evaluated by hand.
#[test]
fn mpnn_single_edge_by_hand() {
    let spec = LayerSpec::new(LayerKind::MessagePassing, 1, 1, Activation::Silu);
    let net = Backbone::new(vec![spec], Symmetry::SnEquivariant).unwrap();
    // blocks: φ_e1 (3→1), φ_e2 (1→1), φ_h1 (2→1), φ_h2 (1→1)
    let theta = vec![0.5, -0.25, 2.0, 0.1, 1.5, -0.3, 0.7, 0.2, -1.0, 1.2, 0.05];
    let p = ParamVector::from_vec(net.specs(), theta.clone()).unwrap();
    let y = Matrix::from_rows(&[[1.0], [-2.0], [0.5]]);
    let mut a = Matrix::zeros(3, 3);
    a[(0, 1)] = 0.8;
    a[(1, 0)] = 0.8;
    let out = mpnn_forward(&net, &p, &y, &a).unwrap();
    let silu = |z: f64| z / (1.0 + (-z).exp());
    let message = |hi: f64, hj: f64, aij: f64| {
        let z1 = theta[0] * hi + theta[1] * hj + theta[2] * aij + theta[3];
        silu(theta[4] * silu(z1) + theta[5])
    };
    let update = |hi: f64, m: f64| theta[9] * silu(theta[6] * hi + theta[7] * m + theta[8]) + theta[10];
    let expected = [update(1.0, message(1.0, -2.0, 0.8)), update(-2.0, message(-2.0, 1.0, 0.8)), update(0.5, 0.0)];
    for (i, e) in expected.iter().enumerate() {
        assert!((out[(i, 0)] - e).abs() <= 1e-14, "{i}: {} vs {e}", out[(i, 0)]);
    }
}

#[test]
fn mpnn_properties() {
    let mut rng = Rng::new(93);
    let net = Backbone::mpnn(4, 6, 3, 2, Activation::Silu).unwrap();
    let p = randomized(&net, &mut rng);
    let y = rng.normal_matrix(6, 4);
    let a = random_adjacency(&mut rng, 6);
    let out = mpnn_forward(&net, &p, &y, &a).unwrap();
    for _ in 0..20 {
        let perm = Permutation::new(rng.permutation_map(6)).unwrap();
        let moved = mpnn_forward(&net, &p, &perm.permute_rows(&y).unwrap(), &perm.conjugate(&a).unwrap()).unwrap();
        assert!(moved.sub(&perm.permute_rows(&out).unwrap()).max_abs() <= 1e-12);
    }
    // no edges: every node sees a zero aggregate, so equal features give equal outputs
    let mut flat = Matrix::zeros(3, 4);
    for i in 0..3 {
        flat.row_mut(i).copy_from_slice(y.row(0));
    }
    let lonely = mpnn_forward(&net, &p, &flat, &Matrix::zeros(3, 3)).unwrap();
    assert_eq!(lonely.row(0), lonely.row(2));
    let r = grad_check(&net, &p, &BackboneInput::with_adjacency(y, a), 1e-5).unwrap();
    assert!(r.passes(1e-5) && r.rejected == 0, "{r:?}");
}

#[test]
fn raw_backbones_are_not_euclidean_symmetric() {
    let mut rng = Rng::new(94);
    let g = EuclideanMotion::new(rng.orthogonal(3), rng.normal_vec(3)).unwrap();
    let x = rng.normal_matrix(5, 3);
    let gx = g.apply_rows(&x).unwrap();
    let set = Backbone::setnet(3, 8, 3).unwrap();
    let ps = randomized(&set, &mut rng);
    let a = setnet_forward(&set, &ps, &gx).unwrap();
    let b = g.apply_rows(&setnet_forward(&set, &ps, &x).unwrap()).unwrap();
    assert!(a.sub(&b).max_abs() > 1e-3);
    let mp = Backbone::mpnn(3, 6, 3, 1, Activation::Silu).unwrap();
    let pm = randomized(&mp, &mut rng);
    let adj = random_adjacency(&mut rng, 5);
    let a = mpnn_forward(&mp, &pm, &gx, &adj).unwrap();
    let b = g.apply_rows(&mpnn_forward(&mp, &pm, &x, &adj).unwrap()).unwrap();
    assert!(a.sub(&b).max_abs() > 1e-3);
    let shifted = EuclideanMotion::from_translation(vec![1.0, 0.0, 0.0]);
    let a = setnet_forward(&set, &ps, &shifted.apply_rows(&x).unwrap()).unwrap();
    let b = shifted.apply_rows(&setnet_forward(&set, &ps, &x).unwrap()).unwrap();
    assert!(a.sub(&b).max_abs() > 1e-3);
}

fn p3_labelings() -> (Graph, Graph) {
    (Graph::unweighted(3, &[(0, 1), (1, 2)]).unwrap(), Graph::unweighted(3, &[(1, 0), (0, 2)]).unwrap())
}

#[test]
fn gin_id_properties() {
    let mut rng = Rng::new(95);
    let net = Backbone::gin_id(1, 4, 8, 3, 5).unwrap();
    assert_eq!(net.symmetry(), Symmetry::None);
    let zero = gin_id_forward(&net, &net.zero_params(), &Matrix::zeros(3, 1), &Matrix::zeros(3, 3)).unwrap();
    assert_eq!(zero, vec![0.0; 5]);

    // one node: readout is that node's embedding
    let shallow = Backbone::new(
        vec![
            LayerSpec::new(LayerKind::GinId, 3, 4, Activation::Relu),
            LayerSpec::new(LayerKind::SumReadout, 4, 4, Activation::Identity),
        ],
        Symmetry::None,
    )
    .unwrap()
    .with_identifiers(2)
    .unwrap();
    let ps = randomized(&shallow, &mut rng);
    let y1 = Matrix::from_rows(&[[0.7]]);
    let pooled = gin_id_forward(&shallow, &ps, &y1, &Matrix::zeros(1, 1)).unwrap();
    let emb = Backbone::new(vec![shallow.specs()[0]], Symmetry::None).unwrap().with_identifiers(2).unwrap();
    let node = emb.forward(&ps, &BackboneInput::with_adjacency(y1, Matrix::zeros(1, 1))).unwrap();
    assert_eq!(pooled, node.row(0));

    let p = randomized(&net, &mut rng);
    let (a, b) = p3_labelings();
    let ones = Matrix::from_rows(&[[1.0], [1.0], [1.0]]);
    let ra = gin_id_forward(&net, &p, &ones, a.adjacency()).unwrap();
    let rb = gin_id_forward(&net, &p, &ones, b.adjacency()).unwrap();
    assert!(ra.iter().zip(&rb).any(|(x, y)| (x - y).abs() > 1e-6));
    let model = BoundBackbone::new(net.clone(), p.clone(), |g: &Graph| {
        Ok(BackboneInput::with_adjacency(Matrix::from_vec(g.n(), 1, vec![1.0; g.n()]).unwrap(), g.adjacency().clone()))
    })
    .unwrap();
    let fa = |g: &Graph| {
        let f = graph_sort_frame(g, DEFAULT_TAU_LEX, DEFAULT_EPS_EIG, DEFAULT_MAX_ENUMERATION).unwrap();
        fa_invariant(|x: &Graph| Ok(model.eval(x)?.into_vec()), f.as_enumerated().unwrap(), g).unwrap()
    };
    let (fa_a, fa_b) = (fa(&a), fa(&b));
    assert!(fa_a.iter().zip(&fa_b).all(|(x, y)| (x - y).abs() <= 1e-9));

    let input = BackboneInput::with_adjacency(rng.normal_matrix(4, 1), random_adjacency(&mut rng, 4));
    let r = grad_check(&net, &p, &input, 1e-5).unwrap();
    assert!(r.passes(1e-5), "{r:?}");
    assert!(matches!(
        net.forward(&p, &BackboneInput::with_adjacency(Matrix::zeros(5, 1), Matrix::zeros(5, 5))),
        Err(BackboneError::TooManyNodes { found: 5, max: 4 })
    ));
}

// K3,3 and the triangular prism satisfy I + A' = Q(I + A) with Q a block swap
// commuting with I + A, so with ε = 0 every layer gives H' = QˡH and the sum
// readout cannot tell the two apart under any labeling.
#[test]
fn gin_self_weight_separates_k33_from_the_prism() {
    let k33 = Graph::unweighted(6, &[(0, 3), (0, 4), (0, 5), (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)]).unwrap();
    let prism =
        Graph::unweighted(6, &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (0, 3), (1, 4), (2, 5)]).unwrap();
    let net = Backbone::gin_id(0, 6, 16, 3, 4).unwrap();
    let eps_at: Vec<usize> = (0..3).map(|l| net.specs()[l].param_count() - 1).collect();
    let mut rng = Rng::new(21);
    let mut p = net.init_params(&mut rng);
    let embed = |p: &ParamVector| -> Vec<Vec<f64>> {
        let m = BoundBackbone::new(net.clone(), p.clone(), encode_graph).unwrap();
        [&k33, &prism]
            .iter()
            .map(|g| {
                let frame = graph_sort_frame(g, DEFAULT_TAU_LEX, DEFAULT_EPS_EIG, DEFAULT_MAX_ENUMERATION).unwrap();
                let frame = frame.as_enumerated().unwrap().clone();
                fa_invariant(|x: &Graph| Ok(m.eval(x)?.into_vec()), &frame, *g).unwrap()
            })
            .collect()
    };
    let gap = |e: &[Vec<f64>]| e[0].iter().zip(&e[1]).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let separated = gap(&embed(&p));
    for (l, &at) in eps_at.iter().enumerate() {
        let i = p.offsets()[l] + at;
        p.as_mut_slice()[i] = 0.0;
    }
    assert!(gap(&embed(&p)) < 1e-12);
    assert!(separated > 1e-3, "{separated}");
}

#[test]
fn init_and_sgd() {
    let net = Backbone::mlp(&[4, 8, 2], Activation::Relu).unwrap();
    assert_eq!(net.init_params(&mut Rng::new(3)), net.init_params(&mut Rng::new(3)));
    let p = net.init_params(&mut Rng::new(3));
    let limit = (6.0f64 / 12.0).sqrt();
    assert!(p.layer(0)[..32].iter().all(|v| v.abs() <= limit));
    assert!(p.layer(0)[32..].iter().all(|&v| v == 0.0));
    let g = vec![1.0; p.len()];
    assert_eq!(sgd_step(&p, &g, 0.0).unwrap(), p);

    // loss = ½‖Φ(x) − t‖², one small step decreases it
    let x = [0.5, -1.0, 2.0, 0.3];
    let target = [1.0, -1.0];
    let loss = |q: &ParamVector| {
        let y = mlp_forward(&net, q, &x).unwrap();
        0.5 * y.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    };
    let y = mlp_forward(&net, &p, &x).unwrap();
    let upstream: Vec<f64> = y.iter().zip(&target).map(|(a, b)| a - b).collect();
    let grad = mlp_grad(&net, &p, &x, &upstream).unwrap();
    assert!(loss(&sgd_step(&p, &grad, 1e-2).unwrap()) < loss(&p));
}

#[test]
fn checkpoint_round_trip() {
    let mut rng = Rng::new(96);
    let net = Backbone::mpnn(6, 8, 3, 2, Activation::Silu).unwrap().with_skip().unwrap();
    let p = randomized(&net, &mut rng);
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &net, &p).unwrap();
    let newline = buf.iter().position(|&b| b == b'\n').unwrap();
    let header: CheckpointHeader = serde_json::from_slice(&buf[..newline]).unwrap();
    assert_eq!((header.version, header.len), (CHECKPOINT_VERSION, p.len()));
    assert_eq!(buf.len() - newline - 1, 8 * p.len());
    let (net2, p2) = read_checkpoint(&mut buf.as_slice()).unwrap();
    assert_eq!((net2, p2), (net.clone(), p.clone()));

    let truncated = &buf[..buf.len() - 3];
    assert!(matches!(read_checkpoint(&mut &truncated[..]), Err(BackboneError::Checkpoint(_))));
    let mut wrong_version =
        String::from_utf8(buf[..newline].to_vec()).unwrap().replace("\"version\":1", "\"version\":9");
    wrong_version.push('\n');
    assert!(matches!(read_checkpoint(&mut wrong_version.as_bytes()), Err(BackboneError::Checkpoint(_))));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.ckpt");
    let gin = Backbone::gin_id(1, 5, 4, 2, 2).unwrap();
    let pg = gin.init_params(&mut rng);
    save_checkpoint(&path, &gin, &pg).unwrap();
    assert_eq!(load_checkpoint(&path).unwrap(), (gin, pg));
}

#[test]
fn skip_adds_leading_input_columns() {
    let mut rng = Rng::new(97);
    let net = Backbone::mpnn(6, 4, 3, 1, Activation::Silu).unwrap();
    let skip = net.clone().with_skip().unwrap();
    let p = randomized(&net, &mut rng);
    let input = BackboneInput::with_adjacency(rng.normal_matrix(4, 6), random_adjacency(&mut rng, 4));
    let diff = skip.forward(&p, &input).unwrap().sub(&net.forward(&p, &input).unwrap());
    assert!(diff.sub(&input.features.columns(0, 3)).max_abs() <= 1e-15);
    assert_eq!(skip.backward(&p, &input, &Matrix::zeros(4, 3)).unwrap(), vec![0.0; p.len()]);
}

#[test]
fn fa_gradient_is_mean_of_element_gradients() {
    let mut rng = Rng::new(98);
    let mlp = Backbone::mlp(&[18, 16, 18], Activation::Relu).unwrap();
    let p = randomized(&mlp, &mut rng);
    let model = BoundBackbone::new(mlp, p, encode_points).unwrap();
    let x = PointCloud::new(rng.normal_matrix(6, 3));
    let reshape = |m: Matrix| m.reshape(6, 3);
    let wrapped = FaWrapper::new(
        PcaFrameBuilder::new(GroupKind::Euclidean),
        {
            let model = model.clone();
            move |c: &PointCloud| Ok(reshape(model.eval(c)?))
        },
        OutputAction::RotationOnly,
        Averaging::Full,
    )
    .unwrap();
    let frame = pca_frame(&x, GroupKind::Euclidean, DEFAULT_EPS_SPEC).unwrap();
    let upstream = rng.normal_matrix(6, 3);
    // mean of per-element gradients, each with the upstream pulled back through ρ₂
    let mut mean = vec![0.0; model.params.len()];
    for g in frame.elements() {
        let pulled = OutputAction::RotationOnly.pull_back(g, &upstream, false).unwrap();
        let xi = x.act_inverse(g).unwrap();
        let gi = model.backbone.backward(&model.params, &encode_points(&xi).unwrap(), &pulled.reshape(1, 18)).unwrap();
        mean.iter_mut().zip(gi).for_each(|(m, v)| *m += v / frame.len() as f64);
    }
    let via_fa = crate::fa::fa_equivariant_gradient(
        |c: &PointCloud, u: &Matrix| {
            Ok(model.backbone.backward(&model.params, &encode_points(c)?, &u.clone().reshape(1, 18))?)
        },
        &frame,
        &x,
        &OutputAction::RotationOnly,
        &upstream,
    )
    .unwrap();
    assert!(mean.iter().zip(&via_fa).all(|(a, b)| (a - b).abs() <= 1e-10));

    // FA-wrapped MLP against finite differences, frame held fixed
    let loss = |theta: &[f64]| -> Result<(f64, Vec<u32>), FaError> {
        let q = ParamVector::from_vec(model.backbone.specs(), theta.to_vec())?;
        let m = model.with_params(q)?;
        let out =
            fa_equivariant(|c: &PointCloud| Ok(m.eval(c)?.reshape(6, 3)), &frame, &x, &OutputAction::RotationOnly)?;
        let mut pattern = Vec::new();
        for g in frame.elements() {
            pattern.extend(m.activation_pattern(&x.act_inverse(g)?)?);
        }
        Ok((dot(out.as_slice(), upstream.as_slice()), pattern))
    };
    let r = grad_check_fn(model.params.as_slice(), &via_fa, 1e-5, loss).unwrap();
    assert!(r.passes(1e-5), "{r:?}");
    let _ = wrapped.eval(&x, &mut rng).unwrap();
}

#[test]
fn bound_backbone_in_a_wrapper_keeps_symmetry() {
    let mut rng = Rng::new(99);
    let net = Backbone::setnet(3, 8, 3).unwrap();
    let model = BoundBackbone::new(net.clone(), randomized(&net, &mut rng), encode_points).unwrap();
    let wrapped = FaWrapper::new(
        PcaFrameBuilder::new(GroupKind::Euclidean),
        model,
        OutputAction::WithTranslation,
        Averaging::Full,
    )
    .unwrap();
    let x = PointCloud::new(rng.normal_matrix(7, 3));
    let s = crate::fa::second_symmetry_check(&wrapped, &x, NodeAction::Rows, &mut rng).unwrap();
    assert!(s.permutation <= 1e-8 && s.euclidean <= 1e-8 && s.joint <= 1e-8, "{s:?}");
}
