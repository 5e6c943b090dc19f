//! Semantic checks of cl-terms, their evaluator, the cl-normal form and the layered
//! decomposition against the reference evaluator.

use wagg_core::clkernel::{
    cl_decompose, cl_normalform, clterms_conditioned, clterms_from_aggregation, delta_formula, evaluate_all_cl,
    expand_structure, precompute, ClLeaf, ClTerm, ComponentGraph,
};
use wagg_core::gen::{random_structure, standard_signature, FormulaGen, FormulaGenConfig};
use wagg_core::locality::{localize, Caps};
use wagg_core::logic::{evaluate_formula, evaluate_term, Factor, WProduct, WeightApp};
use wagg_core::structure::all_tuples;
use wagg_core::{
    parse_formula, parse_term, Carrier, CarrierValue, Formula, Fragment, LocalAccessOracle, Term, Var, WeightedStructure,
};

fn g1() -> WeightedStructure {
    WeightedStructure::from_text(
        "signature\nrelation E 2\nrelation R 1\nrelation B 1\nweight w 2 Q\nend\nuniverse 3\n\
         E(0,1)\nE(1,0)\nE(1,2)\nE(2,1)\nR(0)\nB(2)\nw(0,1) = 2\nw(1,0) = 2\nw(1,2) = 1/2\nw(2,1) = 1/2\n",
    )
    .unwrap()
}

fn vars(names: &[&str]) -> Vec<Var> {
    names.iter().map(|s| s.to_string()).collect()
}

fn bind(vs: &[Var], vals: &[usize]) -> Vec<(Var, usize)> {
    vs.iter().cloned().zip(vals.iter().copied()).collect()
}

fn weight(name: &str, carrier: Carrier, vs: &[&str]) -> Factor {
    Factor::Weight(WeightApp::new(name, carrier, vars(vs)).unwrap())
}

/// The graph on the tuple's positions joining components at distance `≤ bound`, computed
/// from breadth-first distances.
fn distance_graph(s: &WeightedStructure, t: &[usize], bound: usize) -> ComponentGraph {
    let mut edges = Vec::new();
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            if s.distance(t[i], t[j]).is_some_and(|d| d <= bound) {
                edges.push((i, j));
            }
        }
    }
    ComponentGraph::new(t.len(), &edges).unwrap()
}

#[test]
fn delta_formulas_select_exactly_the_distance_pattern() {
    let sig = standard_signature();
    for k in 1..=3 {
        let ys: Vec<Var> = (1..=k).map(|i| format!("y{i}")).collect();
        for r in 0..=2 {
            for n in 1..=7 {
                let s = random_structure(&sig, n, 2, (k * 100 + r * 10 + n) as u64).unwrap();
                let universe: Vec<usize> = (0..n).collect();
                for t in all_tuples(&universe, k) {
                    let expected = distance_graph(&s, &t, r);
                    let hits: Vec<ComponentGraph> = ComponentGraph::all(k)
                        .into_iter()
                        .filter(|g| evaluate_formula(&s, &delta_formula(g, r, &ys).unwrap(), &bind(&ys, &t)).unwrap())
                        .collect();
                    assert_eq!(hits, vec![expected], "tuple {t:?}, r = {r}");
                }
            }
        }
    }
}

/// Generated aggregation terms `Σ p.ψ` with r-local `FOW1` bodies over up to three
/// variables, one of which may be free.
fn generated_terms(count: usize, seed: u64) -> Vec<(Term, usize)> {
    let sig = standard_signature();
    let cfg = FormulaGenConfig { fragment: Fragment::FOW1, max_qr: 1, max_agg_depth: 0, max_depth: 3, allow_dist: true };
    let mut g = FormulaGen::new(sig, cfg, seed);
    let shapes: [(&[&str], usize); 5] = [(&["y1"], 0), (&["x", "y1"], 1), (&["y1", "y2"], 0), (&["x", "y1", "y2"], 1), (&["y1", "y2", "y3"], 1)];
    let mut out = Vec::new();
    for i in 0..count {
        let (scope, r) = shapes[i % shapes.len()];
        let r = (r + i / shapes.len()) % 3;
        let body = g.formula(scope);
        let bound: Vec<&str> = scope.iter().copied().filter(|v| v.starts_with('y')).collect();
        let ys = vars(scope);
        let body = localize(&body, r, &ys).unwrap();
        let product = match (i / 2) % 4 {
            0 => WProduct::counting(&vars(&bound)),
            1 if bound.len() >= 2 => WProduct::new(Carrier::RationalField, vec![weight("w", Carrier::RationalField, &bound[..2])]).unwrap(),
            1 => WProduct::new(Carrier::RationalField, vec![weight("q", Carrier::RationalField, &bound[..1])]).unwrap(),
            2 => WProduct::new(
                Carrier::IntegerRing,
                bound.iter().map(|v| weight("c", Carrier::IntegerRing, &[v])).chain([Factor::Const(CarrierValue::int(2))]).collect(),
            )
            .unwrap(),
            _ => WProduct::new(Carrier::ResidueGroup(3), vec![weight("m", Carrier::ResidueGroup(3), &bound[bound.len() - 1..])]).unwrap(),
        };
        out.push((Term::Agg(product, Box::new(body)), r));
    }
    out
}

#[test]
fn aggregation_terms_equal_their_cl_terms() {
    let sig = standard_signature();
    for (i, (u, r)) in generated_terms(15, 7).into_iter().enumerate() {
        let cl = clterms_from_aggregation(&u, r, &Caps::default()).unwrap_or_else(|e| panic!("{e}: {u}"));
        let Term::Agg(p, _) = &u else { unreachable!() };
        assert!(cl.radius() <= r);
        assert!(cl.width() <= p.vars().len() + u.free_vars().len());
        for b in cl.basics() {
            assert!(b.graph.is_connected());
        }
        let hat = cl.to_term();
        let free = u.free_vars();
        // Naive evaluation of very large cl-terms is slow; those get fewer samples.
        let target = if cl.basics().len() > 100 { 40 } else { 300 };
        let mut pairs = 0;
        let mut seed = 0u64;
        while pairs < target {
            let s = random_structure(&sig, 1 + (seed as usize % 8), 3, seed * 101 + i as u64).unwrap();
            seed += 1;
            let universe: Vec<usize> = (0..s.size()).collect();
            for t in all_tuples(&universe, free.len()).into_iter().take(10) {
                let asg = bind(&free, &t);
                assert_eq!(evaluate_term(&s, &u, &asg).unwrap(), evaluate_term(&s, &hat, &asg).unwrap(), "{u}\non\n{}", s.to_text());
                pairs += 1;
            }
        }
    }
}

#[test]
fn graph_patterns_partition_the_summands() {
    let sig = standard_signature();
    let u = parse_term("(agg (* (one y1) (one y2) (one y3)) (and (rel R y1) (not (rel B y3))))", &sig).unwrap();
    let Term::Agg(p, body) = &u else { unreachable!() };
    let ys = vars(&["y1", "y2", "y3"]);
    for seed in 0..10 {
        let s = random_structure(&sig, 6, 2, seed).unwrap();
        let total = evaluate_term(&s, &u, &[]).unwrap();
        let mut sum = CarrierValue::int(0);
        for g in ComponentGraph::all(3) {
            let guarded = Formula::and(vec![(**body).clone(), delta_formula(&g, 3, &ys).unwrap()]);
            let part = evaluate_term(&s, &Term::Agg(p.clone(), Box::new(guarded)), &[]).unwrap();
            sum = wagg_core::algebra::combine(&sum, &part, wagg_core::ArithOp::Add).unwrap();
        }
        assert_eq!(sum, total);
    }
}

#[test]
fn counting_pairs_example() {
    let sig = standard_signature();
    let u = parse_term("(agg (* (one y1) (one y2)) (and (rel R y1) (rel R y2)))", &sig).unwrap();
    let cl = clterms_from_aggregation(&u, 0, &Caps::default()).unwrap();
    // Two connected patterns (single vertex pairs are the edge graph) plus the product
    // term for the disconnected one.
    assert!(cl.basics().len() >= 2);
    for seed in 0..30 {
        let s = random_structure(&sig, 1 + seed as usize % 9, 2, seed).unwrap();
        let reds = s.relation("R").unwrap().tuples().len() as i64;
        assert_eq!(evaluate_term(&s, &cl.to_term(), &[]).unwrap(), CarrierValue::int(reds * reds));
    }
}

#[test]
fn conditioned_terms_follow_the_sentence() {
    let sig = standard_signature();
    let chi = parse_formula("(exists v (rel B v))", &sig).unwrap();
    let u = Term::Agg(WProduct::counting(&vars(&["y"])), Box::new(Formula::and(vec![chi.clone(), Formula::rel("R", &["y"])])));
    let per_j = clterms_conditioned(&u, std::slice::from_ref(&chi), 0, &Caps::default()).unwrap();
    assert_eq!(per_j.len(), 2);
    assert!(per_j[0].0.is_empty() && per_j[0].1.is_zero());
    for seed in 0..30 {
        let s = random_structure(&sig, 1 + seed as usize % 7, 2, seed).unwrap();
        let j = usize::from(evaluate_formula(&s, &chi, &[]).unwrap());
        assert_eq!(evaluate_term(&s, &per_j[j].1.to_term(), &[]).unwrap(), evaluate_term(&s, &u, &[]).unwrap());
    }
    let none = clterms_conditioned(&parse_term("(agg (* (one y)) (rel R y))", &sig).unwrap(), &[], 0, &Caps::default()).unwrap();
    assert_eq!(none.len(), 1);
}

#[test]
fn evaluator_tables_match_naive_values() {
    let mut checked = 0;
    for (i, (u, r)) in generated_terms(10, 19).into_iter().enumerate() {
        // Wide summation equations may exceed the basic-term cap; those are skipped.
        let cl = match clterms_from_aggregation(&u, r, &Caps::unchecked()) {
            Ok(cl) => cl,
            Err(wagg_core::Error::BlowupExceeded { .. }) => continue,
            Err(e) => panic!("{e}: {u}"),
        };
        checked += 1;
        for seed in 0..3u64 {
            let n = [8, 20, 30][seed as usize];
            let s = random_structure(&standard_signature(), n, 2, seed * 13 + i as u64).unwrap();
            let (values, _) = evaluate_all_cl(&s, &cl).unwrap();
            let free = cl.free_vars();
            for (t, v) in values {
                assert_eq!(v, evaluate_term(&s, &cl.to_term(), &bind(&free, &t)).unwrap(), "{cl} at {t:?}");
            }
        }
    }
    assert!(checked >= 8, "only {checked} terms fit the caps");
}

#[test]
fn t_b_table_on_g1() {
    let s = g1();
    let u = parse_term("(agg (* (w x1 y)) (and (= x1 x) (rel E x1 y) (rel B y)))", s.signature()).unwrap();
    let naive: Vec<String> = (0..3).map(|a| evaluate_term(&s, &u, &[("x".into(), a)]).unwrap().to_string()).collect();
    assert_eq!(naive, ["0", "1/2", "0"]);
    let cl = clterms_from_aggregation(&u, 0, &Caps::unchecked()).unwrap();
    let (values, counts) = evaluate_all_cl(&s, &cl).unwrap();
    let got: Vec<String> = values.iter().map(|(_, v)| v.to_string()).collect();
    assert_eq!(got, naive);
    assert!(counts.total() > 0);

    // A ground term has a single total.
    let g = parse_term("(agg (* (w a b)) (rel E a b))", s.signature()).unwrap();
    let cl = clterms_from_aggregation(&g, 0, &Caps::unchecked()).unwrap();
    let oracle = LocalAccessOracle::new(&s);
    let eval = precompute(&cl, &oracle).unwrap();
    assert_eq!(eval.lookup(&[]).unwrap().to_string(), "5");
}

#[test]
fn precompute_queries_scale_linearly() {
    let sig = standard_signature();
    let u = parse_term("(agg (* (q y1) (q y2)) (and (rel E x y1) (rel E y1 y2) (rel R y2)))", &sig).unwrap();
    let cl = clterms_from_aggregation(&u, 1, &Caps::unchecked()).unwrap();
    let q = |n: usize| {
        let s = random_structure(&standard_signature(), n, 2, 5).unwrap();
        let (_, counts) = evaluate_all_cl(&s, &cl).unwrap();
        counts.total() as f64
    };
    let ratio = q(400) / q(200);
    assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn cl_normalform_examples_and_equivalence() {
    let sig = standard_signature();
    let f = parse_formula("(exists x (rel R x))", &sig).unwrap();
    let nf = cl_normalform(&f, &Caps::default()).unwrap();
    match nf.root.leaves().as_slice() {
        [ClLeaf::AtLeastOne { term, .. }] => {
            for seed in 0..10 {
                let s = random_structure(&sig, 1 + seed as usize % 6, 3, seed).unwrap();
                let reds = s.relation("R").unwrap().tuples().len() as i64;
                assert_eq!(evaluate_term(&s, &term.to_term(), &[]).unwrap(), CarrierValue::int(reds));
            }
        }
        other => panic!("unexpected leaves {other:?}"),
    }
    let f = parse_formula("(rel R x)", &sig).unwrap();
    assert_eq!(cl_normalform(&f, &Caps::default()).unwrap().to_formula(), f);

    let cfg = FormulaGenConfig { fragment: Fragment::FOW1, max_qr: 2, max_agg_depth: 0, max_depth: 3, allow_dist: true };
    let mut g = FormulaGen::new(sig.clone(), cfg, 41);
    for i in 0..20 {
        let f = g.formula(if i % 2 == 0 { &["x"] } else { &[] });
        let nf = cl_normalform(&f, &Caps::unchecked()).unwrap();
        let h = nf.to_formula();
        let free = f.free_vars();
        for seed in 0..15u64 {
            let s = random_structure(&sig, 1 + seed as usize % 6, 3, seed * 3 + i).unwrap();
            let universe: Vec<usize> = (0..s.size()).collect();
            for t in all_tuples(&universe, free.len()) {
                let asg = bind(&free, &t);
                assert_eq!(evaluate_formula(&s, &f, &asg).unwrap(), evaluate_formula(&s, &h, &asg).unwrap(), "{f}");
            }
        }
    }
}

/// Checks `𝔄 ⊨ φ[ā] ⟺ 𝔄^φ ⊨ φ′[ā]` for every assignment of the free variables.
fn check_expansion(phi: &Formula, s: &WeightedStructure) {
    let e = expand_structure(s, phi, &Caps::unchecked()).unwrap_or_else(|err| panic!("{err}: {phi}"));
    let free = phi.free_vars();
    let universe: Vec<usize> = (0..s.size()).collect();
    for t in all_tuples(&universe, free.len()) {
        let asg = bind(&free, &t);
        assert_eq!(
            evaluate_formula(s, phi, &asg).unwrap(),
            evaluate_formula(&e.structure, e.formula(), &asg).unwrap(),
            "{phi} at {t:?}\nφ′ = {}\n{}",
            e.formula(),
            s.to_text()
        );
    }
}

#[test]
fn expansion_of_spending_formula() {
    let sig = standard_signature();
    // Customers whose weighted purchases exceed their own price.
    let phi = parse_formula(
        "(pred gt (agg (* (w c1 p)) (and (= c1 c) (rel E c1 p) (rel B p))) (agg (* (q c2)) (= c2 c)))",
        &sig,
    )
    .unwrap();
    let d = cl_decompose(&phi, &Caps::default()).unwrap();
    assert_eq!(d.layers.len(), 2);
    assert_eq!(d.layers[0].symbols.len(), 1);
    assert_eq!(d.layers[0].symbols[0].arity, 1);
    assert!(d.layers[1].symbols.is_empty());
    for seed in 0..10 {
        check_expansion(&phi, &random_structure(&sig, 3 + seed as usize, 3, seed).unwrap());
    }
}

#[test]
fn expansion_on_g1_marks_heavy_vertices() {
    let s = g1();
    let phi = parse_formula("(pred gt (agg (* (w x1 y)) (and (= x1 x) (rel E x1 y))) 1:Q)", s.signature()).unwrap();
    let naive: Vec<usize> = (0..3).filter(|&a| evaluate_formula(&s, &phi, &[("x".into(), a)]).unwrap()).collect();
    assert_eq!(naive, vec![0, 1]);
    let e = expand_structure(&s, &phi, &Caps::default()).unwrap();
    let sym = &e.decomposition.layers[0].symbols[0];
    let marked: Vec<usize> = e.structure.relation(&sym.name).unwrap().tuples().iter().map(|t| t[0]).collect();
    assert_eq!(marked, naive);
    assert!(e.manifest().contains(&sym.name));
}

#[test]
fn expansion_of_local_formula_adds_nothing() {
    let s = g1();
    let phi = parse_formula("(rel R x)", s.signature()).unwrap();
    let e = expand_structure(&s, &phi, &Caps::default()).unwrap();
    assert_eq!(e.structure, s);
    assert_eq!(e.formula(), &phi);
}

#[test]
fn expansion_contract_on_generated_formulas() {
    let sig = standard_signature();
    let cfg = FormulaGenConfig { fragment: Fragment::WA1, max_qr: 1, max_agg_depth: 2, max_depth: 3, allow_dist: false };
    let mut g = FormulaGen::new(sig.clone(), cfg, 77);
    for i in 0..12u64 {
        let phi = g.formula(if i % 2 == 0 { &["x"] } else { &[] });
        for seed in 0..3 {
            check_expansion(&phi, &random_structure(&sig, 2 + (seed as usize * 4) % 10, 2, seed + 10 * i).unwrap());
        }
    }
}

#[test]
fn nested_aggregation_gives_two_layers() {
    let sig = standard_signature();
    let phi = parse_formula(
        "(pred ge (agg (* (q y)) (and (rel E x y) (pred ge (agg (* (one z)) (rel E y z)) 2:Z))) 1:Q)",
        &sig,
    )
    .unwrap();
    let d = cl_decompose(&phi, &Caps::default()).unwrap();
    assert_eq!(d.layers.len(), 3);
    assert!(!d.layers[0].symbols.is_empty() && !d.layers[1].symbols.is_empty());
    for seed in 0..8 {
        check_expansion(&phi, &random_structure(&sig, 4 + seed as usize, 3, seed).unwrap());
    }
}

#[test]
fn cl_terms_render_and_rename() {
    let sig = standard_signature();
    let u = parse_term("(agg (* (q y)) (rel E x y))", &sig).unwrap();
    let cl = clterms_from_aggregation(&u, 0, &Caps::default()).unwrap();
    assert_eq!(cl.free_vars(), vars(&["x"]));
    let renamed = cl.rename_free(&[("x".to_string(), "z".to_string())].into_iter().collect());
    assert_eq!(renamed.free_vars(), vars(&["z"]));
    assert!(matches!(cl, ClTerm::Basic(_)));
}

