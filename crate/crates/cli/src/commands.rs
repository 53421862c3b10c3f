use std::path::Path;

use clopen_lab::equidecomp::{
    density_bounds, emit_dot, verify_witness, zsubset_equidecompose, EquidecompositionWitness, Equidecomposer, Mode,
    SearchBudget, SearchOutcome, ZOutcome, ZSubsetSpec,
};
use clopen_lab::monoid_lab::{
    check_property, coinvariants, grothendieck, recheck, MonoidPresentation, Property, PropertyVerdict,
};
use clopen_lab::partition_engine::{invariant_partition, DEFAULT_ATOM_CAP};
use clopen_lab::space_model::{parse_clopen_for, ActionSpec, ClopenExpr, Depth, FiniteAction, TypeExpr};
use clopen_lab::states_lp::{build_polytope, comparison_gap, gap_is_conclusive, paradox_search, scaled, ParadoxOutcome, Tag};
use clopen_lab::unit_systems::{
    ample_ladder_step, build_unit_system, conjugate_construct, CompatibilityOracle, Equality, UnitSystem,
};
use clopen_lab::{Error, Result};
use serde_json::{json, Value};

use super::{Command, Common, Outcome};

/// Builtin names, also matched against the file stem of a missing spec path.
pub fn builtin(name: &str) -> Option<ActionSpec> {
    let spec = match name {
        "odometer2" | "dyadic" => ActionSpec::odometer(2),
        "shift2" => ActionSpec::full_shift(2, 1),
        "shift2d" => ActionSpec::full_shift(2, 2),
        "amoo" | "at-most-one-one" => ActionSpec::at_most_one_one(),
        "amoo-x-odometer2" => ActionSpec::Product(vec![ActionSpec::at_most_one_one(), ActionSpec::odometer(2)]),
        "swap2" => ActionSpec::Finite(FiniteAction::cyclic(&[1, 0])),
        "trivial2" => ActionSpec::Finite(FiniteAction::trivial(2)),
        _ => {
            if let Some(b) = name.strip_prefix("odometer:") {
                ActionSpec::odometer(b.parse().ok()?)
            } else if let Some(k) = name.strip_prefix("shift:") {
                ActionSpec::full_shift(k.parse().ok()?, 1)
            } else if let Some(p) = name.strip_prefix("cyclic:") {
                let perm: Vec<usize> = p.split(',').map(|x| x.trim().parse().ok()).collect::<Option<_>>()?;
                ActionSpec::Finite(FiniteAction::cyclic(&perm))
            } else {
                return None;
            }
        }
    };
    Some(spec)
}

pub fn resolve_action(name: &str) -> Result<ActionSpec> {
    let path = Path::new(name);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {name}: {e}")))?;
        return ActionSpec::from_toml(&text);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(name);
    let spec = builtin(name)
        .or_else(|| builtin(stem))
        .ok_or_else(|| Error::Input(format!("`{name}` is neither a spec file nor a builtin action")))?;
    spec.validate()?;
    Ok(spec)
}

fn need<'a>(v: &'a Option<String>, flag: &str) -> Result<&'a str> {
    v.as_deref().ok_or_else(|| Error::Input(format!("missing --{flag}")))
}

fn action_of(c: &Common) -> Result<ActionSpec> {
    resolve_action(need(&c.action, "action")?)
}

fn budget_of(c: &Common) -> SearchBudget {
    let d = SearchBudget::default();
    SearchBudget { word_len: c.wordlen.unwrap_or(d.word_len), max_depth: c.max_depth.unwrap_or(d.max_depth), ..d }
}

fn mode_of(c: &Common, default: Mode) -> Result<Mode> {
    match c.mode.as_deref() {
        None => Ok(default),
        Some("equi") => Ok(Mode::Equi),
        Some("sub") => Ok(Mode::Sub),
        Some(m) => Err(Error::Input(format!("mode must be `equi` or `sub`, got `{m}`"))),
    }
}

fn config(cmd: &Command) -> Value {
    let c = cmd.common();
    let action = c.action.as_deref().and_then(|a| resolve_action(a).ok()).map(|a| a.to_json());
    json!({
        "action_arg": c.action,
        "action": action,
        "A": c.a,
        "B": c.b,
        "depth": c.depth,
        "budget": budget_of(c),
        "bound": c.bound,
        "shifts": c.shifts,
        "window": c.window,
        "jobs": c.jobs,
        "verify": c.verify.as_ref().map(|p| p.display().to_string()),
        "mode": c.mode,
        "gens": c.gens,
        "rel": c.rel,
        "property": c.property,
        "unit": c.unit,
        "exact_only": c.exact_only,
    })
}

pub fn run(cmd: &Command) -> Result<Outcome> {
    let config = config(cmd);
    let res = match cmd {
        Command::Compare(c) => compare(c),
        Command::Equidecompose(c) => equidecompose(c),
        Command::TypeLeq(c) => type_leq(c),
        Command::Measures(c) => measures(c),
        Command::Paradox(c) => paradox(c),
        Command::MonoidCheck(c) => monoid_check(c),
        Command::Coinvariants(c) => coinv(c),
        Command::Zsubset(c) => zsubset(c),
        Command::UnitLadder(c) => unit_ladder(c),
        Command::Krieger(c) => krieger(c),
    };
    let (verdict, result) = match res {
        Ok(v) => v,
        Err(Error::Budget(m)) => ("unknown".into(), json!({"reason": m})),
        Err(Error::Refusal(m)) => ("refused".into(), json!({"reason": m})),
        Err(e) => return Err(e),
    };
    Ok(Outcome { verdict, result, config })
}

type Verdict = Result<(String, Value)>;

/// Witness JSON after an independent replay; a failing replay is an internal error.
fn checked_witness(c: &Common, action: &ActionSpec, a: &TypeExpr, b: &TypeExpr, w: &EquidecompositionWitness) -> Result<Value> {
    if let Err(why) = verify_witness(action, a, b, w)? {
        return Err(Error::Invariant(format!("emitted witness fails replay: {why}")));
    }
    if let Some(path) = &c.dot {
        std::fs::write(path, emit_dot(action, w)).map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))?;
    }
    let mut v = w.to_json(action);
    v["verified"] = json!(true);
    Ok(v)
}

fn search_payload(c: &Common, action: &ActionSpec, a: &TypeExpr, b: &TypeExpr, out: SearchOutcome) -> Verdict {
    match out {
        SearchOutcome::Found(w) => Ok(("found".into(), json!({"witness": checked_witness(c, action, a, b, &w)?}))),
        SearchOutcome::Exhausted(r) => Ok(("unknown".into(), json!({"exhausted": r}))),
    }
}

fn replay(path: &Path, action: &ActionSpec, a: &TypeExpr, b: &TypeExpr) -> Verdict {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let wv = v.pointer("/result/witness").or_else(|| v.get("witness")).unwrap_or(&v);
    let w = EquidecompositionWitness::from_json(action, wv)?;
    Ok(match verify_witness(action, a, b, &w)? {
        Ok(()) => ("verified".into(), json!({"pieces": w.pieces.len()})),
        Err(why) => ("rejected".into(), json!({"reason": why})),
    })
}

fn compare(c: &Common) -> Verdict {
    let action = action_of(c)?;
    let a = parse_clopen_for(&action, need(&c.a, "A")?)?;
    let b = parse_clopen_for(&action, need(&c.b, "B")?)?;
    let depth = Depth::uniform(&action, c.depth.unwrap_or(0));
    let gap = comparison_gap(&action, &a, &b, &depth)?;
    let conclusive = gap_is_conclusive(&gap);
    let negative = gap.value < clopen_lab::states_lp::q(0);
    let mut result = json!({"gap": gap.to_json(None), "conclusive": conclusive});
    if !negative {
        let verdict = if conclusive { "not-predicted" } else { "unknown" };
        return Ok((verdict.into(), result));
    }
    let (ta, tb) = (TypeExpr::single(a.clone()), TypeExpr::single(b.clone()));
    let out = Equidecomposer::new(&action, &budget_of(c))?.clopen(&a, &b, Mode::Sub)?;
    let (verdict, payload) = search_payload(c, &action, &ta, &tb, out)?;
    result["search"] = payload;
    Ok((if verdict == "found" { "leq".into() } else { verdict }, result))
}

fn equidecompose(c: &Common) -> Verdict {
    let action = action_of(c)?;
    let a = parse_clopen_for(&action, need(&c.a, "A")?)?;
    let b = parse_clopen_for(&action, need(&c.b, "B")?)?;
    let (ta, tb) = (TypeExpr::single(a.clone()), TypeExpr::single(b.clone()));
    if let Some(path) = &c.verify {
        return replay(path, &action, &ta, &tb);
    }
    let out = Equidecomposer::new(&action, &budget_of(c))?.clopen(&a, &b, mode_of(c, Mode::Equi)?)?;
    search_payload(c, &action, &ta, &tb, out)
}

fn type_leq(c: &Common) -> Verdict {
    let action = action_of(c)?;
    let a = TypeExpr::parse(&action, need(&c.a, "A")?)?;
    let b = TypeExpr::parse(&action, need(&c.b, "B")?)?;
    if let Some(path) = &c.verify {
        return replay(path, &action, &a, &b);
    }
    let out = Equidecomposer::new(&action, &budget_of(c))?.types(&a, &b, mode_of(c, Mode::Sub)?)?;
    search_payload(c, &action, &a, &b, out)
}

fn measures(c: &Common) -> Verdict {
    let action = action_of(c)?;
    let depth = Depth::uniform(&action, c.depth.unwrap_or(1));
    let poly = build_polytope(&action, &depth)?;
    if c.exact_only && poly.tag == Tag::Outer {
        return Ok(("refused".into(), json!({"reason": "the polytope at this depth is an outer approximation", "tag": poly.tag})));
    }
    let a = parse_clopen_for(&action, need(&c.a, "A")?)?;
    let mass = poly.mass(&a)?;
    let hi = poly.maximize(&mass)?;
    let lo = poly.minimize(&mass)?;
    Ok((
        "ok".into(),
        json!({
            "depth": depth.describe(),
            "atoms": poly.partition.len(),
            "tag": poly.tag,
            "max": hi.to_json(Some(&poly.partition)),
            "min": lo.to_json(Some(&poly.partition)),
        }),
    ))
}

fn paradox(c: &Common) -> Verdict {
    let action = action_of(c)?;
    let b = TypeExpr::parse(&action, need(&c.b, "B")?)?;
    let n_max = c.bound.unwrap_or(3) as usize;
    match paradox_search(&action, &b, n_max, &budget_of(c))? {
        ParadoxOutcome::Witness { n, witness } => {
            let w = checked_witness(c, &action, &scaled(&b, n + 1), &scaled(&b, n), &witness)?;
            Ok(("paradoxical".into(), json!({"n": n, "witness": w})))
        }
        ParadoxOutcome::NoneFound { n_max, budget, normalized } => Ok((
            "none-found".into(),
            json!({"n_max": n_max, "budget": budget, "normalized_state": normalized.map(|s| s.to_json(None))}),
        )),
    }
}

fn presentation_of(c: &Common) -> Result<MonoidPresentation> {
    let g = c.gens.ok_or_else(|| Error::Input("missing --gens".into()))?;
    MonoidPresentation::from_parts(g, &c.rel)
}

fn property_json(p: &MonoidPresentation, v: &PropertyVerdict) -> Result<Value> {
    if let Some(cert) = &v.certificate {
        if !recheck(p, cert) {
            return Err(Error::Invariant(format!("certificate for {} fails recheck", v.property.name())));
        }
    }
    let mut out = serde_json::to_value(v).expect("verdicts serialize");
    out["rechecked"] = json!(v.certificate.is_some());
    Ok(out)
}

fn monoid_check(c: &Common) -> Verdict {
    let p = presentation_of(c)?;
    let bound = c.bound.unwrap_or(4);
    let unit = match &c.unit {
        Some(u) => p.parse_vector(u)?,
        None => vec![1; p.gens],
    };
    let props: Vec<Property> = match c.property.as_deref() {
        None | Some("all") => Property::ALL.to_vec(),
        Some(name) => vec![Property::parse(name)?],
    };
    let jobs = c.jobs.max(1);
    let mut verdicts: Vec<Option<Result<PropertyVerdict>>> = vec![None; props.len()];
    std::thread::scope(|s| {
        for (chunk_props, chunk_out) in props.chunks(props.len().div_ceil(jobs)).zip(verdicts.chunks_mut(props.len().div_ceil(jobs))) {
            let (p, unit) = (&p, &unit);
            s.spawn(move || {
                for (prop, slot) in chunk_props.iter().zip(chunk_out) {
                    *slot = Some(check_property(p, *prop, Some(unit), bound));
                }
            });
        }
    });
    let mut list = Vec::new();
    for v in verdicts {
        list.push(property_json(&p, &v.expect("every property ran")?)?);
    }
    let group = grothendieck(&p, bound)?;
    let verdict = if list.len() == 1 { list[0]["verdict"].as_str().unwrap_or("unknown").to_string() } else { "ok".into() };
    Ok((verdict, json!({"presentation": p.to_string(), "unit": unit, "properties": list, "grothendieck": group})))
}

fn coinv(c: &Common) -> Verdict {
    let action = action_of(c)?;
    let depth = Depth::uniform(&action, c.depth.unwrap_or(1));
    let g = coinvariants(&action, &depth)?;
    Ok(("ok".into(), json!({"depth": depth.describe(), "rank": g.rank, "torsion": g.torsion, "atoms": g.atoms})))
}

fn zsubset(c: &Common) -> Verdict {
    let a = ZSubsetSpec::parse(need(&c.a, "A")?)?;
    let b = ZSubsetSpec::parse(need(&c.b, "B")?)?;
    let shifts: Vec<i64> = need(&c.shifts, "shifts")?
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::Input(format!("bad shift `{s}`"))))
        .collect::<Result<_>>()?;
    let window = c.window.unwrap_or(4096);
    let (lo, hi) = density_bounds(&a, window)?;
    let density = json!({"lower": format!("{}/{}", lo.numer(), lo.denom()), "upper": format!("{}/{}", hi.numer(), hi.denom())});
    let out = zsubset_equidecompose(&a, &b, &shifts, window)?;
    let verdict = match &out {
        ZOutcome::Witness(w) if !w.verify(&a, &b) => return Err(Error::Invariant("periodic witness fails replay".into())),
        ZOutcome::HallViolation(h) if !h.recheck(&a, &b) => return Err(Error::Invariant("Hall violation fails recount".into())),
        ZOutcome::Witness(_) => "witness",
        ZOutcome::HallViolation(_) => "hall-violation",
        ZOutcome::Unknown { .. } => "unknown",
    };
    Ok((verdict.into(), json!({"A": a.to_string(), "B": b.to_string(), "density_of_A": density, "outcome": out})))
}

fn unit_ladder(c: &Common) -> Verdict {
    let action = action_of(c)?;
    let u = parse_clopen_for(&action, need(&c.a, "A")?)?;
    let v = parse_clopen_for(&action, need(&c.b, "B")?)?;
    let oracle = CompatibilityOracle::new(&action, &budget_of(c))?;
    let mut audit = Vec::new();
    let Some(map) = oracle.find(&u, &v)? else {
        audit.push(json!({"step": "oracle", "found": false}));
        return Ok(("unknown".into(), json!({"audit": audit})));
    };
    audit.push(json!({"step": "oracle", "found": true, "map": map.to_json(&action)}));
    let base = UnitSystem::trivial(&action);
    let step = ample_ladder_step(&base, &[Equality { u: u.clone(), v: v.clone(), map }])?;
    audit.push(json!({"step": "refine", "rounds": step.rounds, "atoms": step.system.len()}));
    audit.push(json!({"step": "merge", "orbits": step.system.orbits}));
    let (perm, real) = step.mapping_element(&u, &v)?;
    audit.push(json!({"step": "realize", "permutation": perm, "verified": real.verify(&action, &ClopenExpr::Full, &ClopenExpr::Full)?}));
    Ok(("realized".into(), json!({"system": step.system.to_json(), "element": {"permutation": perm, "realization": real.to_json(&action)}, "audit": audit})))
}

/// Unit systems of the invariant partitions at levels `1..=n`, realized by the generators.
pub fn invariant_ladder(action: &ActionSpec, n: usize) -> Result<Vec<UnitSystem>> {
    let schema = action.schema();
    let mut gens = schema.generators();
    if gens.is_empty() {
        gens.push(schema.identity());
    }
    let mut out = Vec::new();
    for k in 1..=n {
        let inv = invariant_partition(action, &gens, &Depth::uniform(action, k), DEFAULT_ATOM_CAP)?
            .map_err(|r| Error::Refusal(format!("{}; {}", r.reason, r.suggestion)))?;
        let atoms = (0..inv.partition.len()).map(|i| inv.partition.atom_expr(i)).collect();
        out.push(build_unit_system(action, atoms, &inv.permutations, Some(&gens))?);
    }
    Ok(out)
}

fn krieger(c: &Common) -> Verdict {
    let action = action_of(c)?;
    let ladder = invariant_ladder(&action, c.depth.unwrap_or(2))?;
    let oracle = CompatibilityOracle::new(&action, &budget_of(c))?;
    let report = conjugate_construct(&oracle, &ladder);
    let verdict = if report.failure.is_none() { "extended" } else { "incomplete" };
    Ok((verdict.into(), report.to_json()))
}
