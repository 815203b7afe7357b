//! DDA raycasting against fine-step ray marching and closed-form rooms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod support;

use support::{march, march_step, random_map, room, slab};
use tinylidar::scan::{beam_angle, MAX_RANGE, NUM_BEAMS};
use tinylidar::sim::{cast_ray, raycast, Pose};

const RAYS_PER_MAP: usize = 200;

#[test]
fn dda_matches_fine_marching_on_random_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut grazes = 0;
    for map in 0..20 {
        let g = random_map(&mut rng);
        let diag = g.resolution * std::f64::consts::SQRT_2;
        let (w, h) = (
            g.width as f64 * g.resolution,
            g.height as f64 * g.resolution,
        );
        let mut casts = 0;
        while casts < RAYS_PER_MAP {
            let x = g.origin[0] + rng.gen_range(0.0..w);
            let y = g.origin[1] + rng.gen_range(0.0..h);
            if g.occupied_at(x, y) {
                continue;
            }
            let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let dda = cast_ray(&g, x, y, theta, MAX_RANGE as f64);
            let (exact, chord) = slab(&g, x, y, theta, MAX_RANGE as f64);
            assert!(
                (dda - exact).abs() < 1e-9,
                "map {map}: ray from ({x},{y}) at {theta}: dda {dda} vs slab {exact}"
            );
            let marched = march(&g, x, y, theta, MAX_RANGE as f64);
            if chord < 2.0 * march_step(&g) && (dda - marched).abs() > diag {
                // the marcher stepped over a corner sliver thinner than its step
                grazes += 1;
            } else {
                assert!(
                    (dda - marched).abs() <= diag,
                    "map {map}: ray from ({x},{y}) at {theta}: dda {dda} vs march {marched}"
                );
            }
            casts += 1;
        }
    }
    assert!(grazes * 100 < 20 * RAYS_PER_MAP, "{grazes} grazing rays");
}

#[test]
fn room_center_reads_five_metres_ahead() {
    let g = room(0.05);
    let scan = raycast(
        &g,
        Pose {
            x: 5.0,
            y: 5.0,
            theta: 0.3,
        },
    )
    .unwrap();
    assert_eq!(scan.len(), NUM_BEAMS);
    let ahead = scan[NUM_BEAMS / 2] as f64;
    // heading 0.3 rad hits the x = 10 wall at 5 / cos(0.3)
    assert!(
        (ahead - 5.0 / 0.3f64.cos()).abs() <= g.resolution,
        "{ahead}"
    );
    let axis = raycast(
        &g,
        Pose {
            x: 5.0,
            y: 5.0,
            theta: 0.0,
        },
    )
    .unwrap();
    assert!((axis[NUM_BEAMS / 2] as f64 - 5.0).abs() <= g.resolution);
}

#[test]
fn wall_one_metre_ahead_reads_two_metres_at_sixty_degrees() {
    let g = room(0.05);
    let pose = Pose {
        x: 5.0,
        y: 9.0,
        theta: std::f64::consts::FRAC_PI_2,
    };
    let scan = raycast(&g, pose).unwrap();
    let i60 = ((60.0 + 135.0) / 0.25) as usize;
    assert!((beam_angle(i60) - 60f64.to_radians()).abs() < 1e-12);
    assert!(
        (scan[i60] as f64 - 2.0).abs() <= g.resolution,
        "{}",
        scan[i60]
    );
    assert!((scan[NUM_BEAMS / 2] as f64 - 1.0).abs() <= g.resolution);
    // mirrored beam sees the same wall
    let im60 = ((-60.0 + 135.0) / 0.25) as usize;
    assert!((scan[im60] as f64 - 2.0).abs() <= g.resolution);
}
