//! Rendering of command results as CSV, JSON or aligned text.

use std::fmt::Write as _;

use frobkit_core::arith::FundamentalDiscriminant;
use frobkit_core::curve::WeierstrassCurve;
use frobkit_core::frobenius::TraceRecord;
use frobkit_core::groupgl2::GroupDensityReport;
use frobkit_core::stats::{
    CmStatus, CmVerdict, DensityEstimate, DistinctFieldsPoint, IsogenyVerdict, LangTrotterPoint,
    SieveReport,
};
use frobkit_core::store::Catalog;
use serde::Serialize;

use crate::Format;

pub const SCHEMA: &str = "frobkit/1";

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    schema: &'static str,
    command: &'static str,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct CurveRef {
    label: Option<String>,
    model: String,
}

impl CurveRef {
    fn of(e: &WeierstrassCurve) -> Self {
        Self {
            label: e.label().map(str::to_string),
            model: e.to_string(),
        }
    }
}

fn json<T: Serialize>(command: &'static str, body: T) -> String {
    let env = Envelope {
        schema: SCHEMA,
        command,
        body,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("reports serialize");
    s.push('\n');
    s
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn estimate_csv(out: &mut String, prefix: Option<&str>, est: &DensityEstimate) {
    for i in 0..est.checkpoints.len() {
        if let Some(p) = prefix {
            out.push_str(p);
            out.push(',');
        }
        let _ = writeln!(
            out,
            "{},{},{},{}",
            est.checkpoints[i], est.hits[i], est.totals[i], est.ratios[i]
        );
    }
}

fn estimate_table(out: &mut String, est: &DensityEstimate) {
    let _ = writeln!(
        out,
        "{:>12} {:>10} {:>10} {:>10}",
        "x", "hits", "total", "ratio"
    );
    for i in 0..est.checkpoints.len() {
        let _ = writeln!(
            out,
            "{:>12} {:>10} {:>10} {:>10.6}",
            est.checkpoints[i], est.hits[i], est.totals[i], est.ratios[i]
        );
    }
    let _ = writeln!(out, "tail max: {:.6}", est.tail_max);
}

pub struct Output {
    format: Format,
}

impl Output {
    pub fn new(format: Format) -> Self {
        Self { format }
    }

    pub fn scan(&self, e: &WeierstrassCurve, x_max: u64, records: &[TraceRecord]) -> String {
        match self.format {
            Format::Csv => {
                let mut out = String::from("p,ap,type,disc\n");
                for r in records {
                    let _ = writeln!(out, "{},{},{},{}", r.p, r.a_p, r.red_type, r.frob_disc);
                }
                out
            }
            Format::Json => {
                #[derive(Serialize)]
                struct Body<'a> {
                    curve: CurveRef,
                    x_max: u64,
                    records: &'a [TraceRecord],
                }
                json(
                    "scan",
                    Body {
                        curve: CurveRef::of(e),
                        x_max,
                        records,
                    },
                )
            }
            Format::Table => {
                let mut out = format!("{:>12} {:>8} {:<14} {:>14}\n", "p", "a_p", "type", "disc");
                for r in records {
                    let _ = writeln!(
                        out,
                        "{:>12} {:>8} {:<14} {:>14}",
                        r.p,
                        r.a_p,
                        r.red_type.to_string(),
                        r.frob_disc.to_string()
                    );
                }
                out
            }
        }
    }

    pub fn compare(
        &self,
        e1: &WeierstrassCurve,
        e2: &WeierstrassCurve,
        x_max: u64,
        verdict: &IsogenyVerdict,
        cm1: &CmVerdict,
        cm2: &CmVerdict,
    ) -> String {
        match self.format {
            Format::Json => {
                #[derive(Serialize)]
                struct Body<'a> {
                    curves: [CurveRef; 2],
                    x_max: u64,
                    cm: [CmStatus; 2],
                    #[serde(flatten)]
                    verdict: &'a IsogenyVerdict,
                }
                json(
                    "compare",
                    Body {
                        curves: [CurveRef::of(e1), CurveRef::of(e2)],
                        x_max,
                        cm: [cm1.verdict, cm2.verdict],
                        verdict,
                    },
                )
            }
            Format::Csv => {
                let mut out = String::from("x,hits,total,ratio\n");
                estimate_csv(&mut out, None, &verdict.supporting.estimate);
                out
            }
            Format::Table => {
                let b = &verdict.supporting.breakdown;
                let mut out = String::new();
                let _ = writeln!(out, "curves:       {} vs {}", e1.name(), e2.name());
                let _ = writeln!(out, "cm:           {} / {}", cm1.verdict, cm2.verdict);
                let _ = writeln!(out, "verdict:      {:?}", verdict.verdict);
                let _ = writeln!(out, "final ratio:  {:.6}", verdict.final_ratio);
                let _ = writeln!(out, "eligible:     {}", verdict.supporting.eligible);
                let _ = writeln!(
                    out,
                    "coincidences: ord/ord {}, ord/ss {}, ss/ord {}, ss/ss {}",
                    b.ordinary_ordinary,
                    b.ordinary_supersingular,
                    b.supersingular_ordinary,
                    b.supersingular_supersingular
                );
                estimate_table(&mut out, &verdict.supporting.estimate);
                out
            }
        }
    }

    pub fn cm(&self, e: &WeierstrassCurve, x_max: u64, v: &CmVerdict) -> String {
        let disc = v.dominant_disc.map(|d| d.to_string()).unwrap_or_default();
        match self.format {
            Format::Json => {
                #[derive(Serialize)]
                struct Body<'a> {
                    curve: CurveRef,
                    x_max: u64,
                    #[serde(flatten)]
                    verdict: &'a CmVerdict,
                }
                json(
                    "cm",
                    Body {
                        curve: CurveRef::of(e),
                        x_max,
                        verdict: v,
                    },
                )
            }
            Format::Csv => format!(
                "verdict,dominant_disc,ordinary_count,supersingular_count,ordinary_share,ss_share\n{},{},{},{},{},{}\n",
                v.verdict, disc, v.ordinary_count, v.supersingular_count, v.ordinary_share, v.ss_share
            ),
            Format::Table => format!(
                "curve:          {}\nverdict:        {}\ndominant disc:  {}\nordinary:       {} (share {:.6})\nsupersingular:  {} (share {:.6})\n",
                e.name(),
                v.verdict,
                if disc.is_empty() { "-" } else { &disc },
                v.ordinary_count,
                v.ordinary_share,
                v.supersingular_count,
                v.ss_share
            ),
        }
    }

    pub fn field_density(
        &self,
        e: &WeierstrassCurve,
        x_max: u64,
        disc: FundamentalDiscriminant,
        est: &DensityEstimate,
    ) -> String {
        match self.format {
            Format::Json => {
                #[derive(Serialize)]
                struct Body<'a> {
                    curve: CurveRef,
                    x_max: u64,
                    disc: FundamentalDiscriminant,
                    estimate: &'a DensityEstimate,
                }
                json(
                    "field-density",
                    Body {
                        curve: CurveRef::of(e),
                        x_max,
                        disc,
                        estimate: est,
                    },
                )
            }
            Format::Csv => {
                let mut out = String::from("x,hits,total,ratio\n");
                estimate_csv(&mut out, None, est);
                out
            }
            Format::Table => {
                let mut out = format!("curve: {}  field disc: {}\n", e.name(), disc);
                estimate_table(&mut out, est);
                out
            }
        }
    }

    pub fn lang_trotter(
        &self,
        e: &WeierstrassCurve,
        x_max: u64,
        disc: FundamentalDiscriminant,
        points: &[LangTrotterPoint],
    ) -> String {
        match self.format {
            Format::Json => {
                #[derive(Serialize)]
                struct Body<'a> {
                    curve: CurveRef,
                    x_max: u64,
                    disc: FundamentalDiscriminant,
                    points: &'a [LangTrotterPoint],
                }
                json(
                    "lt",
                    Body {
                        curve: CurveRef::of(e),
                        x_max,
                        disc,
                        points,
                    },
                )
            }
            Format::Csv => {
                let mut out = String::from("x,count,normalized\n");
                for p in points {
                    let _ = writeln!(out, "{},{},{}", p.x, p.count, p.normalized);
                }
                out
            }
            Format::Table => {
                let mut out = format!(
                    "curve: {}  field disc: {}\n{:>12} {:>10} {:>12}\n",
                    e.name(),
                    disc,
                    "x",
                    "count",
                    "normalized"
                );
                for p in points {
                    let _ = writeln!(out, "{:>12} {:>10} {:>12.6}", p.x, p.count, p.normalized);
                }
                out
            }
        }
    }

    pub fn distinct_fields(
        &self,
        e: &WeierstrassCurve,
        x_max: u64,
        points: &[DistinctFieldsPoint],
    ) -> String {
        match self.format {
            Format::Json => {
                #[derive(Serialize)]
                struct Body<'a> {
                    curve: CurveRef,
                    x_max: u64,
                    points: &'a [DistinctFieldsPoint],
                }
                json(
                    "distinct-fields",
                    Body {
                        curve: CurveRef::of(e),
                        x_max,
                        points,
                    },
                )
            }
            Format::Csv => {
                let mut out = String::from("x,distinct\n");
                for p in points {
                    let _ = writeln!(out, "{},{}", p.x, p.distinct);
                }
                out
            }
            Format::Table => {
                let mut out = format!("curve: {}\n{:>12} {:>10}\n", e.name(), "x", "distinct");
                for p in points {
                    let _ = writeln!(out, "{:>12} {:>10}", p.x, p.distinct);
                }
                out
            }
        }
    }

    pub fn sieve(
        &self,
        e1: &WeierstrassCurve,
        e2: &WeierstrassCurve,
        x_max: u64,
        report: &SieveReport,
    ) -> String {
        match self.format {
            Format::Json => {
                #[derive(Serialize)]
                struct Body<'a> {
                    curves: [CurveRef; 2],
                    x_max: u64,
                    #[serde(flatten)]
                    report: &'a SieveReport,
                }
                json(
                    "sieve",
                    Body {
                        curves: [CurveRef::of(e1), CurveRef::of(e2)],
                        x_max,
                        report,
                    },
                )
            }
            Format::Csv => {
                let mut out = String::from("ell,x,hits,total,ratio\n");
                for level in &report.per_ell {
                    estimate_csv(&mut out, Some(&level.ell.to_string()), &level.estimate);
                }
                estimate_csv(&mut out, Some("joint"), &report.joint);
                out
            }
            Format::Table => {
                let mut out = format!("curves: {} vs {}\n", e1.name(), e2.name());
                for level in &report.per_ell {
                    let _ = writeln!(out, "l = {}", level.ell);
                    estimate_table(&mut out, &level.estimate);
                }
                out.push_str("joint\n");
                estimate_table(&mut out, &report.joint);
                out
            }
        }
    }

    pub fn group_density(&self, r: &GroupDensityReport) -> String {
        match self.format {
            Format::Json => json("group-density", r),
            Format::Csv => format!(
                "l,h,h_prime,ratio_num,ratio_den\n{},{},{},{},{}\n",
                r.ell,
                r.h_size,
                r.h_prime_size,
                r.ratio.numer(),
                r.ratio.denom()
            ),
            Format::Table => format!(
                "l:        {}\n|H|:      {}\n|H'|:     {}\nratio:    {}/{} (~{:.9})\n",
                r.ell,
                r.h_size,
                r.h_prime_size,
                r.ratio.numer(),
                r.ratio.denom(),
                r.ratio_f64()
            ),
        }
    }

    pub fn twist(&self, e: &WeierstrassCurve, d: i64, twisted: &WeierstrassCurve) -> String {
        match self.format {
            Format::Json => {
                #[derive(Serialize)]
                struct Body {
                    curve: CurveRef,
                    d: i64,
                    twist: String,
                }
                json(
                    "twist",
                    Body {
                        curve: CurveRef::of(e),
                        d,
                        twist: twisted.to_string(),
                    },
                )
            }
            Format::Csv => format!(
                "curve,d,twist\n{},{},{}\n",
                quote(&e.to_string()),
                d,
                quote(&twisted.to_string())
            ),
            Format::Table => format!("{twisted}\n"),
        }
    }

    pub fn catalog(&self, catalog: &Catalog) -> String {
        let tags = |e: &frobkit_core::store::CatalogEntry| {
            e.tags.iter().map(|t| t.to_string()).collect::<Vec<_>>()
        };
        match self.format {
            Format::Json => {
                #[derive(Serialize)]
                struct Body<'a> {
                    entries: &'a [frobkit_core::store::CatalogEntry],
                }
                json(
                    "catalog",
                    Body {
                        entries: catalog.entries(),
                    },
                )
            }
            Format::Csv => {
                let mut out = String::from("label,model,tags\n");
                for e in catalog.entries() {
                    let _ = writeln!(
                        out,
                        "{},{},{}",
                        quote(&e.label),
                        quote(&e.curve().to_string()),
                        quote(&tags(e).join(" "))
                    );
                }
                out
            }
            Format::Table => {
                let mut out = String::new();
                for e in catalog.entries() {
                    let _ = writeln!(
                        out,
                        "{:<8} {:<28} {}",
                        e.label,
                        e.curve().to_string(),
                        tags(e).join(" ")
                    );
                }
                out
            }
        }
    }
}
