//! Annuitization of capital expenditures.

/// Annuity factor `r(1+r)^n / ((1+r)^n - 1)`, the payment per year that
/// repays one unit of capital over `n` years at discount rate `r`.
/// Degrades gracefully to straight-line `1/n` as `r → 0`.
pub fn annuity_factor(discount: f64, lifetime_years: f64) -> f64 {
    if discount.abs() < 1e-12 {
        return 1.0 / lifetime_years;
    }
    let growth = (1.0 + discount).powf(lifetime_years);
    discount * growth / (growth - 1.0)
}

/// Annualized cost of an investment: annuitized capital plus fixed
/// operation and maintenance as a percentage of capex per year.
pub fn annuity(capex: f64, discount: f64, lifetime_years: f64, fom_pct: f64) -> f64 {
    capex * annuity_factor(discount, lifetime_years) + capex * fom_pct / 100.0
}
