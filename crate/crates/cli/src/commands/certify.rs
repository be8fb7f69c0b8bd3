use anyhow::Context;
use unfold_core::dirac::{positive_energy_spinor, plane_wave_spinor, reduce_to_dirac, GammaSet, Normalization};
use unfold_core::geometry::{lightcone5, minkowski5};
use unfold_core::oracle::{certify_reduction, kg_candidates, se_candidates};
use unfold_core::scalar::rat;
use unfold_core::{IdentityCertificate, Orientation, Rational, ReductionAnsatz, ReductionKind};

use super::Outcome;
use crate::config::{axis_index, CertifyAnsatz, CertifyConfig};
use crate::output::OutDir;

struct Row {
    combination: String,
    winner: String,
    verdict: bool,
    extra: String,
}

fn ansatz(kind: ReductionKind, orientation: Orientation, m: &Rational, direction: Option<&str>) -> anyhow::Result<ReductionAnsatz> {
    let standard = ReductionAnsatz::standard(kind, orientation, m)?;
    let Some(name) = direction else { return Ok(standard) };
    let dir = axis_index(kind, name)?;
    if dir == standard.direction_axis {
        return Ok(standard);
    }
    let reduced = (0..standard.dim()).filter(|&a| a != dir).collect();
    Ok(ReductionAnsatz::new(kind.chart(), dir, standard.rate.clone(), reduced)?)
}

/// On-shell momentum for the normalization: `p² = m²` (standard) or `p² = 2m²` (paper).
fn dirac_momentum(n: Normalization, m: &Rational) -> [Rational; 4] {
    let base = match n {
        Normalization::Standard => [rat(5, 3), rat(4, 3), rat(0, 1), rat(0, 1)],
        Normalization::Paper => [rat(3, 2), rat(1, 2), rat(0, 1), rat(0, 1)],
    };
    base.map(|c| c * m)
}

fn scalar_row(name: String, cert: &IdentityCertificate) -> Row {
    Row {
        combination: name,
        winner: cert.winner.clone().unwrap_or_else(|| "none".into()),
        verdict: cert.verdict,
        extra: format!("scale {}", cert.scale.as_deref().unwrap_or("-")),
    }
}

pub fn run(cfg: &CertifyConfig, out: &mut OutDir) -> anyhow::Result<Outcome> {
    let m = cfg.mass()?;
    let direction = cfg.direction.as_deref();
    let wants = |k: CertifyAnsatz| cfg.ansatz == k || cfg.ansatz == CertifyAnsatz::All;
    let mut rows = Vec::new();

    if wants(CertifyAnsatz::Kg) {
        for orientation in cfg.orientation.expand() {
            let a = ansatz(ReductionKind::KleinGordon, orientation, &m, direction)?;
            let cert = certify_reduction(&minkowski5(), &a, &kg_candidates(&m)).context("certifying the space-like reduction")?;
            let name = format!("kg-{orientation}");
            out.write(&format!("certificate-{name}.json"), format!("{}\n", cert.to_json()).as_bytes())?;
            rows.push(scalar_row(name, &cert));
        }
    }
    if wants(CertifyAnsatz::Se) {
        for orientation in cfg.orientation.expand() {
            for convention in cfg.convention.expand() {
                let a = ansatz(ReductionKind::Schroedinger, orientation, &m, direction)?;
                let cert = certify_reduction(&lightcone5(convention), &a, &se_candidates(&m))
                    .context("certifying the light-like reduction")?;
                let name = format!("se-{orientation}-{}", convention.name());
                out.write(&format!("certificate-{name}.json"), format!("{}\n", cert.to_json()).as_bytes())?;
                rows.push(scalar_row(name, &cert));
            }
        }
    }
    if wants(CertifyAnsatz::Dirac) {
        for n in cfg.normalization.expand() {
            let gammas = GammaSet::new(n);
            let p = dirac_momentum(n, &m);
            let u = positive_energy_spinor(&p, &m, &gammas)?;
            let cert = reduce_to_dirac(&plane_wave_spinor(&u, &p), &m, &gammas, cfg.jet_order)?;
            let name = format!("dirac-{n}");
            out.write(&format!("certificate-{name}.json"), format!("{}\n", cert.to_json()).as_bytes())?;
            let f = &cert.factorization;
            rows.push(Row {
                combination: name,
                winner: cert.certificate.winner.clone().unwrap_or_else(|| "none".into()),
                verdict: cert.certificate.verdict,
                extra: format!(
                    "square factor {}; off-slice factorization {}",
                    cert.square_factor.as_deref().unwrap_or("-"),
                    if f.holds_for_all_psi { "holds" } else { "obstructed" }
                ),
            });
        }
    }

    let width = rows.iter().map(|r| r.combination.len()).max().unwrap_or(0);
    let mut outcome = Outcome::default();
    for r in &rows {
        println!("{:width$}  {:8}  {}  ({})", r.combination, if r.verdict { "verified" } else { "FAILED" }, r.winner, r.extra);
        outcome.check(r.verdict, || format!("{}: no candidate matches", r.combination));
    }
    Ok(outcome)
}
