#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use geofind::rules::{parse_rules, Rule, DEFAULT_RULES};
use geofind::{parse_construction, Construction};

pub const EXAMPLES: [(&str, &str); 4] = [
    ("midline", include_str!("../../examples/midline.gc")),
    ("medial", include_str!("../../examples/medial.gc")),
    ("inscribed", include_str!("../../examples/inscribed.gc")),
    ("pappus", include_str!("../../examples/pappus.gc")),
];

pub fn examples() -> Vec<(&'static str, Construction)> {
    EXAMPLES
        .iter()
        .map(|(name, text)| (*name, parse_construction(text).unwrap()))
        .collect()
}

pub fn example(name: &str) -> Construction {
    let text = EXAMPLES.iter().find(|(n, _)| *n == name).unwrap().1;
    parse_construction(text).unwrap()
}

pub fn default_rules() -> Vec<Rule> {
    parse_rules(DEFAULT_RULES).unwrap()
}

const NAMES: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];

/// Construction script with at most `max_points` points, deterministic in
/// `seed`. Always parses; may still be numerically degenerate.
pub fn random_script(seed: u64, max_points: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=max_points.min(NAMES.len()));
    let free = rng.gen_range(2..=3.min(n));
    let mut lines: Vec<String> = NAMES[..free].iter().map(|p| format!("point {p}")).collect();
    for i in free..n {
        let p = NAMES[i];
        let known = &NAMES[..i];
        let pick = |rng: &mut ChaCha8Rng, k: usize| -> Vec<&str> {
            known.choose_multiple(rng, k).copied().collect()
        };
        let kinds: Vec<u8> = (0..7)
            .filter(|k| [1, 2, 2, 2, 4, 3, 3][*k as usize] <= i)
            .collect();
        let line = match *kinds.choose(&mut rng).unwrap() {
            0 => format!("point {p}"),
            1 => format!("on_line {p} {}", pick(&mut rng, 2).join(" ")),
            2 => format!("on_circle {p} {}", pick(&mut rng, 2).join(" ")),
            3 => format!("midpoint {p} {}", pick(&mut rng, 2).join(" ")),
            4 => format!("intersect {p} {}", pick(&mut rng, 4).join(" ")),
            5 => format!("foot {p} {}", pick(&mut rng, 3).join(" ")),
            _ => format!("circumcenter {p} {}", pick(&mut rng, 3).join(" ")),
        };
        lines.push(line);
    }
    lines.join("\n") + "\n"
}

pub fn random_construction(seed: u64, max_points: usize) -> Construction {
    let script = random_script(seed, max_points);
    parse_construction(&script)
        .unwrap_or_else(|e| panic!("generated script does not parse: {e}\n{script}"))
}
