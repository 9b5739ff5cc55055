use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dichotomy::bifurcation::{boundary_trace, locate_zeros_on_path, sign_map_2d, Semicircle};
use dichotomy::dichotomy::{
    dichotomy_constants, matrix_sign_projector, verify_dichotomy, HalfLine,
};
use dichotomy::index::{
    circle_holonomy, index_report, parity_pair, pejsachowicz_class, Bundle, IndexReport,
};
use dichotomy::model::{load_config, CoefficientFamily, Param, Perturbation, ProblemSpec};
use dichotomy::report::{CheckResult, Report};
use dichotomy::subspaces::{frame_field, subspace_pair, transversality, FrameField};
use dichotomy::Result;

use crate::artifacts::Artifacts;
use crate::{Failure, VerifyArgs};

pub const DEFAULT_SEED: u64 = 0x5eed;
pub const DEFAULT_DISC_RESOLUTION: usize = 101;

pub const GROUPS: &[&str] = &[
    "paper-sec4-BC",
    "poschl-teller",
    "paper-sec4-exBC",
    "dichotomy",
    "roughness",
    "disc-radial",
    "disc-product",
];

type Runner = fn(&Settings) -> Result<Vec<CheckResult>>;

const PERTURBATION_TRIALS: usize = 20;
const PERTURBATION_FRACTION: f64 = 0.9;
const PERTURBATION_REACH: f64 = 5.0;

struct Settings {
    seed: u64,
    disc_resolution: usize,
    truncation_time: Option<f64>,
}

impl Settings {
    fn spec(&self, family: &str, space: &str) -> Result<ProblemSpec> {
        let t = self.truncation_time.unwrap_or(12.0);
        load_config(&format!(
            r#"{{ "family": {{ "kind": "builtin", "name": "{family}" }}, "space": {space},
                 "numerics": {{ "T": {t}, "ode_tol": 1e-10, "reortho_interval": 1.0, "zero_tol": 1e-8 }} }}"#
        ))
    }

    fn bc_path(&self, nodes: usize) -> Result<ProblemSpec> {
        self.spec(
            "paper-sec4-BC",
            &format!(r#"{{ "topology": "interval", "range": [0.0, {PI}], "nodes": {nodes}, "lambda0": [0.0, {PI}] }}"#),
        )
    }
}

fn check(
    group: &str,
    name: &str,
    passed: bool,
    measured: f64,
    tolerance: f64,
    detail: String,
) -> CheckResult {
    CheckResult {
        name: name.into(),
        group: group.into(),
        passed,
        measured,
        tolerance,
        detail,
    }
}

fn at_most(group: &str, name: &str, measured: f64, tolerance: f64, detail: String) -> CheckResult {
    check(
        group,
        name,
        measured <= tolerance,
        measured,
        tolerance,
        detail,
    )
}

fn at_least(group: &str, name: &str, measured: f64, bound: f64, detail: String) -> CheckResult {
    check(
        group,
        name,
        measured >= bound,
        measured,
        bound,
        format!("lower bound; {detail}"),
    )
}

fn equals(group: &str, name: &str, value: f64, expected: f64) -> CheckResult {
    check(
        group,
        name,
        value == expected,
        value,
        0.0,
        format!("expected exactly {expected}"),
    )
}

fn analysed(spec: &ProblemSpec) -> Result<(FrameField, IndexReport)> {
    let field = frame_field(&spec.family, &spec.space, &spec.numerics)?;
    let index = index_report(&spec.family, &field, &spec.numerics)?;
    Ok((field, index))
}

fn reflection_bc(s: &Settings) -> Result<Vec<CheckResult>> {
    const G: &str = "paper-sec4-BC";
    let spec = s.bc_path(181)?;
    let (field, index) = analysed(&spec)?;
    let mut mismatches = 0;
    let mut reference_err: f64 = 0.0;
    for sample in &index.samples {
        let theta = sample.coords[0];
        let want = -theta.cos();
        if (theta - PI / 2.0).abs() >= 0.01 && sample.ld.signum() != want.signum() {
            mismatches += 1;
        }
        reference_err = reference_err.max(
            sample
                .reference_ld
                .map_or(f64::INFINITY, |v| (v - want).abs()),
        );
    }
    let psi = parity_pair(&index, 0, spec.space.len() - 1)?;
    let path = locate_zeros_on_path(&spec.family, &field, &spec.numerics)?;
    let (zero_err, zero_margin) = match path.zeros.as_slice() {
        [z] => ((z.lambda - PI / 2.0).abs(), z.margin),
        _ => (f64::INFINITY, f64::INFINITY),
    };
    let margin_at = |theta: f64| -> Result<f64> {
        let pair = subspace_pair(&spec.family, &Param::Scalar(theta), &spec.numerics)?;
        Ok(transversality(&pair, spec.numerics.zero_tol)?.1)
    };
    let quarter = margin_at(PI / 4.0)?.min(margin_at(3.0 * PI / 4.0)?);
    Ok(vec![
        at_most(
            G,
            "sign_matches_minus_cos",
            mismatches as f64,
            0.0,
            "181 nodes, |theta - pi/2| >= 0.01".into(),
        ),
        at_most(
            G,
            "reference_ld_abs_error",
            reference_err,
            1e-6,
            "max |LD - (-cos theta)|".into(),
        ),
        equals(G, "parity_0_pi", f64::from(psi), 1.0),
        at_most(
            G,
            "zero_location",
            zero_err,
            1e-6,
            format!("{} zero(s); |theta* - pi/2|", path.zeros.len()),
        ),
        at_most(
            G,
            "margin_at_zero",
            zero_margin,
            1e-6,
            "smallest singular value of [U|S] at theta*".into(),
        ),
        at_least(
            G,
            "margin_at_quarter_points",
            quarter,
            0.1,
            "min over pi/4, 3pi/4".into(),
        ),
    ])
}

fn poschl_teller(s: &Settings) -> Result<Vec<CheckResult>> {
    const G: &str = "poschl-teller";
    let spec = s.spec(
        G,
        r#"{ "topology": "interval", "range": [0.5, 1.5], "nodes": 101, "lambda0": [0.5, 1.5] }"#,
    )?;
    let (field, index) = analysed(&spec)?;
    let mut rel: f64 = 0.0;
    for sample in &index.samples {
        let l = sample.coords[0];
        if (l - 1.0).abs() >= 0.01 {
            let want = 2.0 * l * (1.0 - l * l);
            rel = rel.max(
                sample
                    .reference_ld
                    .map_or(f64::INFINITY, |v| (v - want).abs() / want.abs()),
            );
        }
    }
    let psi = parity_pair(&index, 0, spec.space.len() - 1)?;
    let path = locate_zeros_on_path(&spec.family, &field, &spec.numerics)?;
    let zero_err = match path.zeros.as_slice() {
        [z] => (z.lambda - 1.0).abs(),
        _ => f64::INFINITY,
    };
    Ok(vec![
        at_most(
            G,
            "reference_ld_rel_error",
            rel,
            1e-5,
            "vs 2 l (1 - l^2), |l - 1| >= 0.01".into(),
        ),
        equals(G, "parity_endpoints", f64::from(psi), 1.0),
        at_most(
            G,
            "zero_location",
            zero_err,
            1e-6,
            format!("{} zero(s); |l* - 1|", path.zeros.len()),
        ),
    ])
}

fn mobius_bc(s: &Settings) -> Result<Vec<CheckResult>> {
    const G: &str = "paper-sec4-exBC";
    let mut out = Vec::new();
    let mut verdicts = Vec::new();
    for nodes in [360, 720] {
        let spec = s.spec(
            G,
            &format!(r#"{{ "topology": "circle", "nodes": {nodes}, "lambda0": [0.0] }}"#),
        )?;
        let field = frame_field(&spec.family, &spec.space, &spec.numerics)?;
        let stable = circle_holonomy(&field, Bundle::Stable)?;
        let unstable = circle_holonomy(&field, Bundle::Unstable)?;
        let class = pejsachowicz_class(&spec.family, &spec.space, &spec.numerics)?;
        verdicts.push((stable, unstable, class));
        if nodes == 360 {
            out.push(equals(
                G,
                "stable_holonomy_sign",
                f64::from(stable.sign),
                -1.0,
            ));
            out.push(equals(G, "stable_w1", f64::from(stable.w1), 1.0));
            out.push(equals(G, "unstable_w1", f64::from(unstable.w1), 0.0));
            out.push(equals(G, "pejsachowicz_class", f64::from(class), 1.0));
        }
    }
    out.push(check(
        G,
        "stable_under_refinement",
        verdicts[0] == verdicts[1],
        f64::from(u8::from(verdicts[0] != verdicts[1])),
        0.0,
        "360 vs 720 nodes".into(),
    ));
    Ok(out)
}

fn dichotomy_check(s: &Settings) -> Result<Vec<CheckResult>> {
    const G: &str = "dichotomy";
    let spec = s.bc_path(2)?;
    let minus: Vec<f64> = (0..20).map(|i| -4.0 * i as f64 / 19.0).collect();
    let plus: Vec<f64> = minus.iter().map(|t| -t).collect();
    let mut worst = f64::NEG_INFINITY;
    let mut invariance: f64 = 0.0;
    for theta in [0.0, 0.6, PI / 2.0, 2.2, PI] {
        let p = Param::Scalar(theta);
        let (em, ep) = dichotomy_constants(&spec.family, &p)?;
        let Some(mats) = spec.family.piecewise_matrices(&p) else {
            unreachable!("built-in family is piecewise")
        };
        let (b, c) = mats?;
        let pm = matrix_sign_projector(&b, spec.numerics.hyperbolicity_tol)?.projector;
        let pp = matrix_sign_projector(&c, spec.numerics.hyperbolicity_tol)?.projector;
        for (half, proj, est, grid) in [
            (HalfLine::Minus, &pm, em, &minus),
            (HalfLine::Plus, &pp, ep, &plus),
        ] {
            let r = verify_dichotomy(&spec.family, &p, half, proj, est.k, est.alpha, grid, 1e-11)?;
            worst = worst.max(r.max_violation).max(r.max_mirror_violation);
            invariance = invariance.max(r.invariance_residual);
        }
    }
    Ok(vec![
        at_most(
            G,
            "max_violation",
            worst,
            1e-9,
            "20x20 (s,t) grid per half-line, 5 angles".into(),
        ),
        at_most(
            G,
            "projector_invariance",
            invariance,
            1e-6,
            "relative".into(),
        ),
    ])
}

fn roughness(s: &Settings) -> Result<Vec<CheckResult>> {
    const G: &str = "roughness";
    let spec = s.bc_path(37)?;
    let l0 = spec.space.lambda0().to_vec();
    let mut threshold = f64::INFINITY;
    for &i in &l0 {
        let (em, ep) = dichotomy_constants(&spec.family, &spec.space.node(i))?;
        threshold = threshold
            .min(em.roughness_bound())
            .min(ep.roughness_bound());
    }
    let amplitude = PERTURBATION_FRACTION * threshold;
    let (_, reference) = analysed(&spec)?;
    let signs = |r: &IndexReport| -> Vec<i8> {
        l0.iter()
            .map(|&i| r.sample(i).map_or(0, |x| x.sign))
            .collect()
    };
    let ref_psi = parity_pair(&reference, l0[0], l0[1])?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut changed = 0;
    for _ in 0..PERTURBATION_TRIALS {
        let fam = CoefficientFamily::Perturbed {
            base: Box::new(spec.family.clone()),
            perturbation: Perturbation::random(
                &mut rng,
                spec.family.dim(),
                amplitude,
                PERTURBATION_REACH,
            ),
        };
        let field = frame_field(&fam, &spec.space, &spec.numerics)?;
        let r = index_report(&fam, &field, &spec.numerics)?;
        if signs(&r) != signs(&reference) || parity_pair(&r, l0[0], l0[1])? != ref_psi {
            changed += 1;
        }
    }
    Ok(vec![at_most(
        G,
        "invariants_unchanged",
        changed as f64,
        0.0,
        format!(
            "{PERTURBATION_TRIALS} trials, seed {}, sup|Q| = {amplitude:.5} = {PERTURBATION_FRACTION} alpha/(4K^2)",
            s.seed
        ),
    )])
}

fn disc(
    s: &Settings,
    family: &str,
    lambda0: &str,
) -> Result<(dichotomy::bifurcation::GridFinding, Vec<Semicircle>)> {
    let spec = s.spec(
        family,
        &format!(
            r#"{{ "topology": "grid2d", "resolution": {}, "lambda0": {lambda0} }}"#,
            s.disc_resolution
        ),
    )?;
    let field = frame_field(&spec.family, &spec.space, &spec.numerics)?;
    let grid = sign_map_2d(&field, &spec.numerics)?;
    let crossings = boundary_trace(&grid, &spec.space)?
        .into_iter()
        .map(|c| c.semicircle)
        .collect();
    Ok((grid, crossings))
}

fn disc_radial(s: &Settings) -> Result<Vec<CheckResult>> {
    const G: &str = "disc-radial";
    let (grid, crossings) = disc(s, G, "[[0.0, 0.0], [0.99, 0.0]]")?;
    Ok(vec![
        equals(G, "sign_components", grid.sign_components() as f64, 2.0),
        equals(G, "disconnects", f64::from(u8::from(grid.disconnects)), 1.0),
        equals(G, "boundary_sign_changes", crossings.len() as f64, 0.0),
    ])
}

fn disc_product(s: &Settings) -> Result<Vec<CheckResult>> {
    const G: &str = "disc-product";
    let (grid, crossings) = disc(s, G, "[[-1.0, 0.0]]")?;
    let hit = [Semicircle::Upper, Semicircle::Lower]
        .iter()
        .filter(|h| crossings.contains(h))
        .count();
    Ok(vec![
        equals(G, "disconnects", f64::from(u8::from(grid.disconnects)), 1.0),
        equals(G, "semicircles_with_sign_change", hit as f64, 2.0),
    ])
}

pub fn run(args: &VerifyArgs) -> Result<(), Failure> {
    if let Some(name) = &args.only {
        if !GROUPS.contains(&name.as_str()) {
            return Err(Failure::Usage(format!(
                "unknown check group `{name}`; expected one of {}",
                GROUPS.join(", ")
            )));
        }
    }
    let settings = Settings {
        seed: args.seed,
        disc_resolution: args.grid,
        truncation_time: args.truncation_time,
    };
    let runners: [(&str, Runner); 7] = [
        ("paper-sec4-BC", reflection_bc),
        ("poschl-teller", poschl_teller),
        ("paper-sec4-exBC", mobius_bc),
        ("dichotomy", dichotomy_check),
        ("roughness", roughness),
        ("disc-radial", disc_radial),
        ("disc-product", disc_product),
    ];
    let mut checks = Vec::new();
    for (group, runner) in runners {
        if args.only.as_deref().is_some_and(|o| o != group) {
            continue;
        }
        match runner(&settings) {
            Ok(c) => checks.extend(c),
            Err(e) => checks.push(check(
                group,
                "completed",
                false,
                f64::NAN,
                0.0,
                e.to_string(),
            )),
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();

    if args.json {
        let summary = serde_json::json!({
            "passed": checks.len() - failed,
            "failed": failed,
            "checks": &checks,
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&summary).expect("summary serialises")
        );
    } else {
        for c in &checks {
            println!(
                "[{}] {}/{}: measured {:e} (tolerance {:e}; {})",
                if c.passed { "PASS" } else { "FAIL" },
                c.group,
                c.name,
                c.measured,
                c.tolerance,
                c.detail
            );
        }
        println!(
            "{} of {} checks passed",
            checks.len() - failed,
            checks.len()
        );
    }
    if let Some(dir) = &args.output {
        let mut report = Report::new("verify");
        report.checks = Some(checks);
        Artifacts::report_only(report).write(dir)?;
    }
    if failed > 0 {
        return Err(Failure::ChecksFailed(failed));
    }
    Ok(())
}
