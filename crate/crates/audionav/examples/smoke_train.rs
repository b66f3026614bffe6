use audionav::audio::default_library;
use audionav::env::generate_maze;
use audionav::rl::{train, TrainConfig};
use std::time::Instant;

fn main() {
    env_logger::init();
    let args: Vec<String> = std::env::args().collect();
    let steps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3000);
    let density: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let size: i32 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(8);

    let train_envs: Vec<_> = (0..20).map(|s| generate_maze(s, size, size, density).unwrap()).collect();
    let val_envs: Vec<_> = (100..104).map(|s| generate_maze(s, size, size, density).unwrap()).collect();
    let lib = default_library(16_000);
    let cfg = TrainConfig {
        total_waypoint_steps: steps,
        eval_every_updates: 10,
        eval_episodes: 12,
        checkpoint_every_updates: 0,
        ..Default::default()
    };
    let t0 = Instant::now();
    let out = train(&train_envs, &val_envs, &lib, &cfg, |_, _| Ok(())).unwrap();
    for p in &out.curve {
        if p.update % 5 == 0 || p.val_sr.is_some() {
            println!(
                "update {:4} steps {:6} return {:7.3} train_sr {:.2} val_sr {:?} val_spl {:?}",
                p.update, p.waypoint_steps, p.mean_return, p.train_sr, p.val_sr, p.val_spl
            );
        }
    }
    println!("trained {} waypoint steps / {} updates in {:.1}s", out.waypoint_steps, out.updates, t0.elapsed().as_secs_f64());
}
