use super::{Schedule, ScheduleError};

/// `active` at every `interval + 1`-th step starting at t = 0, `filler`
/// elsewhere. Interval 0 applies `active` at every step.
pub fn periodic_schedule(
    active: &str,
    filler: &str,
    interval: usize,
    length: usize,
) -> Result<Schedule, ScheduleError> {
    let period = interval + 1;
    Schedule::new((0..length).map(|t| if t % period == 0 { active } else { filler }))
}

/// Interventions whose gaps widen arithmetically.
///
/// Active steps sit at `p0 = 0` and `p(k+1) = p(k) + 1 + g(k)`, with the
/// first gap `g = 1` and every later gap growing by `increment`. Increment
/// 0 therefore alternates `active, filler`.
pub fn arithmetic_gap_schedule(
    active: &str,
    filler: &str,
    increment: usize,
    length: usize,
) -> Result<Schedule, ScheduleError> {
    let mut labels = vec![filler; length];
    let mut pos = 0usize;
    let mut gap = 1usize;
    while pos < length {
        labels[pos] = active;
        pos = pos.saturating_add(1).saturating_add(gap);
        gap = gap.saturating_add(increment);
    }
    Schedule::new(labels)
}
