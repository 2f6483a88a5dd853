use rand::Rng as _;

use super::{lift_morphology, random_orthogonal, text_morphology_2d, uniform};
use super::{ActionPlan, MorphologyConfig, SurfaceConfig};
use crate::error::Result;
use crate::geom::Vec3;
use crate::rng;
use crate::scalar::{lit, Scalar};

/// Random gesture: 5-10 (configurable) points uniform in a cube, each link
/// bent to a sagitta uniform in `[d * sagitta_min, d * sagitta_max]` on a
/// random side of its chord.
pub fn generate_gesture_plan<S: Scalar>(cfg: &MorphologyConfig, seed: u64) -> Result<ActionPlan<S>> {
    cfg.validate()?;
    let g = &cfg.gesture;
    let mut rng = rng::seeded(seed);
    let n = g.points.sample(&mut rng);
    let mut targets: Vec<Vec3<S>> = Vec::with_capacity(n);
    while targets.len() < n {
        let p = Vec3::new(
            lit(rng.gen_range(0.0..g.cube_size)),
            lit(rng.gen_range(0.0..g.cube_size)),
            lit(rng.gen_range(0.0..g.cube_size)),
        );
        // a repeated point would give a zero-length link
        if targets
            .last()
            .map_or(true, |q: &Vec3<S>| q.distance(p) > lit(1e-6 * g.cube_size))
        {
            targets.push(p);
        }
    }
    let midpoints = targets
        .windows(2)
        .map(|w| {
            let chord = w[1] - w[0];
            let d = crate::scalar::to_f64(chord.norm());
            let h = uniform(&mut rng, d * g.sagitta_min, d * g.sagitta_max);
            let side = random_orthogonal(chord, &mut rng);
            w[0].lerp(w[1], lit(0.5)) + side * lit(h)
        })
        .collect();
    ActionPlan::new(targets, midpoints)
}

/// Air-writing word of random uppercase letters (2-4 by default) lifted
/// onto `surface`. Returns the word and its plan.
pub fn generate_airwriting_plan<S: Scalar>(
    cfg: &MorphologyConfig,
    surface: &SurfaceConfig,
    seed: u64,
) -> Result<(String, ActionPlan<S>)> {
    cfg.validate()?;
    let mut rng = rng::seeded(seed);
    let n = cfg.gesture.letters.sample(&mut rng);
    let word: String = (0..n)
        .map(|_| (b'A' + rng.gen_range(0..26u8)) as char)
        .collect();
    let m = text_morphology_2d(&word, cfg, rng.gen())?;
    Ok((word, lift_morphology(&m, surface)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gesture_points_in_cube_and_sagitta_bounds() {
        let cfg = MorphologyConfig::default();
        for seed in 0..200 {
            let plan: ActionPlan<f64> = generate_gesture_plan(&cfg, seed).unwrap();
            assert!((5..=10).contains(&plan.targets.len()));
            for p in &plan.targets {
                for a in 0..3 {
                    assert!(p[a] >= 0.0 && p[a] <= 100.0);
                }
            }
            for (j, l) in plan.links.iter().enumerate() {
                let d = plan.targets[j].distance(plan.targets[j + 1]);
                let mid = plan.targets[j].lerp(plan.targets[j + 1], 0.5);
                let h = plan.midpoints[j].distance(mid);
                assert!(h >= d / 20.0 * (1.0 - 1e-9) && h <= d / 5.0 * (1.0 + 1e-9));
                let r = (d * d / 4.0 + h * h) / (2.0 * h);
                assert!((l.radius - r).abs() < 1e-9 * r.max(1.0));
            }
            plan.check_invariants(1e-9).unwrap();
        }
    }

    #[test]
    fn gesture_is_deterministic() {
        let cfg = MorphologyConfig::default();
        let a: ActionPlan<f64> = generate_gesture_plan(&cfg, 9).unwrap();
        let b: ActionPlan<f64> = generate_gesture_plan(&cfg, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn airwriting_word_length() {
        let cfg = MorphologyConfig::default();
        let surface = SurfaceConfig::for_canvas(cfg.canvas_size);
        for seed in 0..30 {
            let (word, plan): (String, ActionPlan<f64>) =
                generate_airwriting_plan(&cfg, &surface, seed).unwrap();
            assert!((2..=4).contains(&word.len()));
            assert!(word.chars().all(|c| c.is_ascii_uppercase()));
            assert!(plan.targets.len() >= 2 * 3);
        }
    }
}
