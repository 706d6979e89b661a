//! Fixed ten-hue palette for skill coloring; indices beyond ten cycle.

/// Ten maximally distinct hues.
pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
    "#7f7f7f", "#bcbd22", "#17becf",
];

/// Color for a skill index; cycles past ten.
pub fn skill_color(skill: usize) -> &'static str {
    PALETTE[skill % PALETTE.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_distinct_hues_then_cycling() {
        for i in 0..10 {
            for j in (i + 1)..10 {
                assert_ne!(skill_color(i), skill_color(j));
            }
        }
        assert_eq!(skill_color(10), skill_color(0));
        assert_eq!(skill_color(23), skill_color(3));
    }
}
