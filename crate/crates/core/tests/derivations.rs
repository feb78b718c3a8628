//! Derivation corpus: the shipped documents, generated rewrite chains per
//! effect, soundness against the decision procedure, and single-step mutants.

use std::path::Path;

use effalg::effect::{get_effect, EffectKind, EffectSpec, Params};
use effalg::gen::{atoms, random_term};
use effalg::proofs::format::{from_json, load, spec_for, to_json};
use effalg::proofs::{check_derivation, Conclusion, Derivation, Direction, Relation, Step, Subst};
use effalg::relations::check_leq_terms;
use effalg::tree::{Term, Tree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PER_EFFECT: usize = 25;

fn proofs_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/proofs"))
}

fn matches(pat: &Term, t: &Term, s: &mut Subst) -> bool {
    match (pat, t) {
        (Tree::Leaf(v), _) => match s.get(v) {
            Some(bound) => bound == t,
            None => {
                s.insert(*v, t.clone());
                true
            }
        },
        (Tree::Node(p, pc), Tree::Node(o, tc)) => {
            p == o && pc.len() == tc.len() && pc.iter().zip(tc).all(|(a, b)| matches(a, b, s))
        }
        _ => pat == t,
    }
}

fn instance(t: &Term, s: &Subst) -> Term {
    t.bind(&mut |v| s[v].clone())
}

/// A random valid chain of axiom rewrites and order steps from a random term.
fn generate(spec: &EffectSpec, rng: &mut ChaCha8Rng) -> Derivation {
    let start = random_term(&spec.signature, 2, 2, rng);
    let fillers = atoms(2);
    let mut cur = start.clone();
    let mut steps = Vec::new();
    let mut symmetric = true;
    let len = rng.gen_range(1..=5);
    while steps.len() < len {
        let positions = cur.positions();
        let mut candidates = Vec::new();
        for at in &positions {
            let sub = cur.subtree(at).unwrap();
            for ax in &spec.axioms {
                let Some((l, r)) = ax.finite_sides() else { continue };
                let dirs: &[Direction] =
                    if ax.is_equation() { &[Direction::Forward, Direction::Backward] } else { &[Direction::Forward] };
                for &dir in dirs {
                    let (from, into) = if dir == Direction::Forward { (&l, &r) } else { (&r, &l) };
                    let mut s = Subst::new();
                    if !matches(from, sub, &mut s) {
                        continue;
                    }
                    for v in &ax.metavars {
                        s.entry(*v).or_insert_with(|| fillers[rng.gen_range(0..fillers.len())].clone());
                    }
                    let (fi, ii) = (instance(from, &s), instance(into, &s));
                    if fi == ii {
                        continue;
                    }
                    let next = cur.replace(at, ii).unwrap();
                    if next.size() <= 40 {
                        candidates.push((ax.name.clone(), s, dir, at.clone(), next, ax.is_equation()));
                    }
                }
            }
        }
        if candidates.is_empty() || rng.gen_bool(0.2) {
            let at = &positions[rng.gen_range(0..positions.len())];
            let next = cur.replace(at, Tree::Top).unwrap();
            symmetric &= next == cur;
            steps.push(Step::Order { to: next.clone() });
            cur = next;
            continue;
        }
        let (name, subst, direction, at, next, eq) = candidates.swap_remove(rng.gen_range(0..candidates.len()));
        symmetric &= eq;
        let step = if !at.is_empty() && rng.gen_bool(0.3) {
            let (head, rest) = at.split_at(1);
            let inner_to = next.subtree(head).unwrap().clone();
            Step::Congruence {
                at: head.to_vec(),
                steps: vec![Step::Axiom { name, subst, direction, at: rest.to_vec(), to: inner_to }],
                to: next.clone(),
            }
        } else {
            Step::Axiom { name, subst, direction, at, to: next.clone() }
        };
        steps.push(step);
        cur = next;
    }
    Derivation {
        effect: spec.name().to_string(),
        params: None,
        conclusion: Conclusion { lhs: start, rhs: cur, relation: if symmetric { Relation::Eq } else { Relation::Leq } },
        assumptions: Vec::new(),
        steps,
        converse_steps: Vec::new(),
    }
}

fn corpus() -> Vec<(EffectSpec, Vec<Derivation>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    EffectKind::ALL
        .iter()
        .map(|kind| {
            let spec = get_effect(kind.name(), &Params::default()).unwrap();
            let ds = (0..PER_EFFECT).map(|_| generate(&spec, &mut rng)).collect();
            (spec, ds)
        })
        .collect()
}

fn assert_sound(spec: &EffectSpec, d: &Derivation) {
    let (l, r) = (&d.conclusion.lhs, &d.conclusion.rhs);
    let fwd = check_leq_terms(spec, l, r).unwrap();
    assert!(!fwd.status.is_refuted(), "{}: derivable but refuted\n{}", spec.name(), to_json(d));
    if d.conclusion.relation == Relation::Eq {
        let back = check_leq_terms(spec, r, l).unwrap();
        assert!(!back.status.is_refuted(), "{}: converse refuted\n{}", spec.name(), to_json(d));
    }
}

#[test]
fn generated_corpus_checks_and_is_sound() {
    for (spec, ds) in corpus() {
        assert!(ds.len() >= 20);
        for d in &ds {
            let c = check_derivation(&spec, d).unwrap_or_else(|e| panic!("{e}\n{}", to_json(d)));
            assert!(!c.uses_assumptions);
            assert_eq!(from_json(&to_json(d)).unwrap(), *d);
            assert_sound(&spec, d);
        }
    }
}

fn axiom_mut(step: &mut Step) -> Option<(&mut Direction, &mut Subst)> {
    match step {
        Step::Axiom { direction, subst, .. } => Some((direction, subst)),
        Step::Congruence { steps, .. } => steps.first_mut().and_then(axiom_mut),
        _ => None,
    }
}

#[test]
fn every_single_step_mutant_is_rejected() {
    let mut mutants = 0;
    for (spec, ds) in corpus() {
        for d in &ds {
            for i in 0..d.steps.len() {
                let mut swapped = d.clone();
                if let Some((dir, _)) = axiom_mut(&mut swapped.steps[i]) {
                    *dir = match dir {
                        Direction::Forward => Direction::Backward,
                        Direction::Backward => Direction::Forward,
                    };
                    let e = check_derivation(&spec, &swapped).expect_err("swapped direction accepted");
                    assert_eq!(e.index, i);
                    mutants += 1;
                }
                let keys: Vec<_> = match axiom_mut(&mut d.clone().steps[i]) {
                    Some((_, s)) => s.keys().copied().collect(),
                    None => Vec::new(),
                };
                for k in keys {
                    let mut perturbed = d.clone();
                    let (_, s) = axiom_mut(&mut perturbed.steps[i]).unwrap();
                    let old = s[&k].clone();
                    s.insert(k, if old == Tree::Bottom { Tree::Top } else { Tree::Bottom });
                    let e = check_derivation(&spec, &perturbed).expect_err("perturbed substitution accepted");
                    assert_eq!(e.index, i);
                    mutants += 1;
                }
            }
        }
    }
    assert!(mutants > 300, "only {mutants} mutants");
}

#[test]
fn shipped_documents() {
    let mut count = 0;
    for entry in std::fs::read_dir(proofs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let d = from_json(&text).unwrap();
        assert_eq!(to_json(&d), text, "{} is not in canonical form", path.display());
        let spec = spec_for(&d).unwrap();
        let c = check_derivation(&spec, &d).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if !c.uses_assumptions {
            assert_sound(&spec, &d);
        }
        count += 1;
    }
    assert!(count >= 9);
    let d = load(&proofs_dir().join("invalid/top-below-bot.json")).unwrap();
    let e = check_derivation(&spec_for(&d).unwrap(), &d).unwrap_err();
    assert_eq!(e.index, 0);
}

#[test]
fn assumption_steps_are_not_symmetric() {
    let d = load(&proofs_dir().join("store-bot-eq-upd.json")).unwrap();
    let spec = spec_for(&d).unwrap();
    let mut no_converse = d.clone();
    no_converse.converse_steps.clear();
    assert!(check_derivation(&spec, &no_converse).is_err());
    let mut wrong = d.clone();
    wrong.assumptions.truncate(1);
    let e = check_derivation(&spec, &wrong).unwrap_err();
    assert_eq!(e.index, d.steps.len() + 1);
}
