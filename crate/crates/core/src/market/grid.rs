use chrono::{Datelike, Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid. Calendar dates are labels; all arithmetic uses
/// year fractions `k · δt/1y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    /// Step length in years (1/12 for monthly).
    pub step_years: f64,
    pub n_steps: usize,
    pub origin: NaiveDate,
}

pub const MONTH_IN_YEARS: f64 = 1.0 / 12.0;

impl TimeGrid {
    pub fn new(step_years: f64, n_steps: usize, origin: NaiveDate) -> Result<Self> {
        if !(step_years > 0.0 && step_years.is_finite()) {
            return Err(Error::config("grid.step_years", "must be positive"));
        }
        if n_steps == 0 {
            return Err(Error::config("grid.n_steps", "must be at least 1"));
        }
        Ok(TimeGrid {
            step_years,
            n_steps,
            origin,
        })
    }

    pub fn monthly(n_steps: usize, origin: NaiveDate) -> Result<Self> {
        Self::new(MONTH_IN_YEARS, n_steps, origin)
    }

    /// Monthly grid covering `years` whole years.
    pub fn monthly_years(years: usize, origin: NaiveDate) -> Result<Self> {
        Self::monthly(years * 12, origin)
    }

    pub fn year_fraction(&self, step: usize) -> f64 {
        step as f64 * self.step_years
    }

    pub fn steps_per_year(&self) -> f64 {
        1.0 / self.step_years
    }

    /// Number of whole steps in `years`, if it is a multiple of the step.
    pub fn steps_for_years(&self, years: f64) -> Option<usize> {
        let steps = years / self.step_years;
        let rounded = steps.round();
        if rounded >= 0.0 && (steps - rounded).abs() < 1e-9 {
            Some(rounded as usize)
        } else {
            None
        }
    }

    /// Steps in a horizon given in months, if the grid divides it.
    pub fn steps_for_months(&self, months: f64) -> Option<usize> {
        self.steps_for_years(months * MONTH_IN_YEARS)
    }

    /// Label date of step `k`. Only meaningful for monthly grids, where the
    /// label is the month end `k` months after the origin.
    pub fn date(&self, step: usize) -> NaiveDate {
        if (self.step_years - MONTH_IN_YEARS).abs() < 1e-12 {
            month_end_after(self.origin, step as u32)
        } else {
            let days = (self.year_fraction(step) * 365.25).round() as i64;
            self.origin + chrono::Duration::days(days)
        }
    }
}

pub fn is_month_end(date: NaiveDate) -> bool {
    date.succ_opt().is_none_or(|next| next.month() != date.month())
}

/// Month end `months` months after the month of `date`.
pub fn month_end_after(date: NaiveDate, months: u32) -> NaiveDate {
    let first = date.with_day(1).expect("day 1 exists");
    let target = first + Months::new(months + 1);
    target.pred_opt().expect("month end precedes the first of next month")
}
