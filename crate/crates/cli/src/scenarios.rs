//! The built-in worked scenarios on the default carrier: the pair-sharing
//! domain that is not condensing, and its weak-complete refinement.

use std::sync::Arc;

use condensing::domains::{moore_closure, AbstractDomain};
use condensing::lp_semantics::{abstract_eval, check_condensing, Program};
use condensing::shells::{is_weak_complete, lin_arrow_domain, weak_complete_shell};
use condensing::subst::{enumerate_carrier, CarrierConfig, NamedSets, SubCarrier, SubstSet};

use crate::commands::{render_fixpoints, sides, CliError, CliResult, Settings};

/// `p(X,Y) <- {X/a; Y/a}.`: either variable may be bound to the constant.
pub const EXAMPLE_PROGRAM: &str = "p(X,Y) <- {X/a; Y/a}.\n";

pub const NAMES: [&str; 2] = ["4.2", "4.9"];

/// One asserted equality, compared on rendered values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub label: String,
    pub expected: String,
    pub actual: String,
}

impl Check {
    pub fn ok(&self) -> bool {
        self.expected == self.actual
    }
}

struct Ctx {
    c: Arc<SubCarrier>,
    ns: NamedSets,
    program: Program,
    checks: Vec<Check>,
}

impl Ctx {
    fn new(settings: &Settings) -> CliResult<Self> {
        let cfg = CarrierConfig { max_members: settings.max_carrier, ..CarrierConfig::default() };
        let c = enumerate_carrier(cfg)?;
        let ns = c.named_sets()?;
        let program = Program::parse(&c, EXAMPLE_PROGRAM)?;
        Ok(Ctx { c, ns, program, checks: Vec::new() })
    }

    fn check(&mut self, label: &str, expected: impl Into<String>, actual: impl Into<String>) {
        self.checks.push(Check { label: label.into(), expected: expected.into(), actual: actual.into() });
    }

    fn set(&self, s: &SubstSet) -> String {
        self.c.describe_set(s)
    }

    fn dom(&self, d: &AbstractDomain<SubstSet>) -> String {
        render_fixpoints(&*self.c, d)
    }

    fn pair_sharing(&self) -> CliResult<AbstractDomain<SubstSet>> {
        Ok(moore_closure(&*self.c, [self.ns.i_xy.clone()])?)
    }
}

/// Runs the named scenario and returns every check, passing or not.
pub fn run(name: &str, settings: &Settings) -> CliResult<Vec<Check>> {
    let mut cx = Ctx::new(settings)?;
    match name {
        "4.2" => not_condensing(&mut cx, settings)?,
        "4.9" => refined(&mut cx, settings)?,
        other => {
            return Err(CliError::Usage(format!("unknown example `{other}` (known: {})", NAMES.join(", "))));
        }
    }
    Ok(cx.checks)
}

fn not_condensing(cx: &mut Ctx, settings: &Settings) -> CliResult<()> {
    let cfg = settings.eval_config();
    let rho = cx.pair_sharing()?;
    let shown = cx.dom(&rho);
    cx.check("moore_closure({I(X,Y)})", "fixpoints: TOP I(X,Y)", shown);
    let psh = cx.c.psh_domain()?;
    let shown = cx.dom(&psh);
    cx.check("pair-sharing domain", "fixpoints: TOP I(X,Y)", shown);

    let f_top = abstract_eval(&cx.program, &rho, "p", &cx.ns.top, &cfg)?;
    let shown = cx.set(&f_top);
    cx.check("abstract_eval p at TOP", "I(X,Y)", shown);

    let v = check_condensing(&cx.program, &rho, "p", &cfg)?;
    cx.check("condensing", "no", if v.holds { "yes" } else { "no" });
    let (w, s) = match &v.witness {
        Some(w) => {
            (format!("({}, {})", cx.set(&w.theta), cx.set(&w.phi)), format!("{} vs {}", cx.set(&w.lhs), cx.set(&w.rhs)))
        }
        None => ("none".into(), "none".into()),
    };
    cx.check("witness (theta, phi)", "(I(X,Y), TOP)", w);
    cx.check("sides F(rho(theta*phi)) vs rho(theta*F(phi))", "I(X,Y) vs TOP", s);
    Ok(())
}

fn refined(cx: &mut Ctx, settings: &Settings) -> CliResult<()> {
    let cfg = settings.eval_config();
    let c = cx.c.clone();
    let ns = cx.ns.clone();
    let r = |a: &SubstSet, b: &SubstSet| c.residual_sets(a, b);

    let s = cx.set(&r(&ns.top, &ns.i_xy)?);
    cx.check("TOP -o I(X,Y)", "G(X,Y)", s);
    let s = cx.set(&r(&ns.i_xy, &ns.i_xy)?);
    cx.check("I(X,Y) -o I(X,Y)", "G(X,Y)+EG", s);

    let rho = cx.pair_sharing()?;
    let arrow = lin_arrow_domain(&*c, &rho, &rho)?;
    let s = cx.dom(&arrow);
    cx.check("rho -o rho", "fixpoints: TOP G(X,Y)+EG G(X,Y)", s);

    let shell = weak_complete_shell(&*c, &rho, settings.iteration_cap)?.domain;
    let s = cx.dom(&shell);
    cx.check("weak-complete shell of rho", "fixpoints: TOP I(X,Y) G(X,Y)+EG G(X,Y)", s);

    let arrow = lin_arrow_domain(&*c, &shell, &shell)?;
    let s = cx.dom(&arrow);
    cx.check("rho' -o rho'", "fixpoints: TOP I(X,Y) G(X,Y)+EG G(X,Y)", s);
    let meet = condensing::domains::reduced_product(&*c, &[&shell, &arrow])?;
    cx.check("rho' /\\ (rho' -o rho') = rho'", "yes", if meet == shell { "yes" } else { "no" });
    let wc = is_weak_complete(&*c, &shell)?;
    cx.check("rho' weak-complete", "yes", if wc.holds { "yes" } else { "no" });

    let f_top = abstract_eval(&cx.program, &shell, "p", &ns.top, &cfg)?;
    let s = cx.set(&f_top);
    cx.check("abstract_eval p at TOP over rho'", "G(X,Y)", s);

    let v = check_condensing(&cx.program, &shell, "p", &cfg)?;
    cx.check("condensing over rho'", "yes", if v.holds { "yes" } else { "no" });

    let (lhs, rhs) = sides(&c, &cx.program, &shell, "p", &ns.i_xy, &ns.top, &cfg)?;
    let s = format!("{} vs {}", cx.set(&lhs), cx.set(&rhs));
    cx.check("sides at (I(X,Y), TOP) over rho'", "G(X,Y) vs G(X,Y)", s);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_scenarios_hold() {
        for name in NAMES {
            let checks = run(name, &Settings::default()).unwrap();
            let bad: Vec<&Check> = checks.iter().filter(|c| !c.ok()).collect();
            assert!(bad.is_empty(), "{name}: {bad:#?}");
        }
    }
}
