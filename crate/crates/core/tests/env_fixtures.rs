//! Scripted trajectories checked against values computed by an independent
//! script (`fixtures/gen_trajectories.py`).

use risac::envs::*;

#[allow(dead_code)]
mod fixtures {
    include!("fixtures/trajectories.rs");
}

use fixtures::*;

const TOL: f64 = 1e-10;

fn check_mc(start: (f64, f64), rows: &[(usize, f64, f64, f64, bool)]) {
    let mut env = MountainCar::new(MountainCarConfig::default());
    env.reset_to(MountainCarState {
        position: start.0,
        velocity: start.1,
    });
    for (i, &(a, x, v, r, done)) in rows.iter().enumerate() {
        let step = env.step(a).unwrap();
        assert!((step.next_state.position - x).abs() < TOL, "step {i}: position {} vs {x}", step.next_state.position);
        assert!((step.next_state.velocity - v).abs() < TOL, "step {i}: velocity {} vs {v}", step.next_state.velocity);
        assert_eq!(step.reward, r, "step {i}");
        assert_eq!(step.done, done, "step {i}");
    }
}

fn check_cp(start: [f64; 4], rows: &[(usize, [f64; 4], f64, bool)]) {
    let mut env = CartPole::new(CartPoleConfig::default());
    env.reset_to(CartPoleState {
        cart_position: start[0],
        cart_velocity: start[1],
        pole_angle: start[2],
        pole_angular_velocity: start[3],
    });
    for (i, &(a, s, r, done)) in rows.iter().enumerate() {
        let step = env.step(a).unwrap();
        let got = step.next_state.features();
        for k in 0..4 {
            assert!((got[k] - s[k]).abs() < TOL, "step {i} component {k}: {} vs {}", got[k], s[k]);
        }
        assert_eq!(step.reward, r, "step {i}");
        assert_eq!(step.done, done, "step {i}");
    }
}

#[test]
fn mountain_car_pumping() {
    assert_eq!(MC_PUMP.len(), 20);
    check_mc(MC_PUMP_START, MC_PUMP);
}

#[test]
fn mountain_car_left_wall_stops_car() {
    assert_eq!(MC_LEFT_WALL.len(), 20);
    assert!(MC_LEFT_WALL.iter().any(|r| r.1 == MC_MIN_POSITION && r.2 == 0.0));
    check_mc(MC_LEFT_WALL_START, MC_LEFT_WALL);
}

#[test]
fn mountain_car_goal_reward() {
    let last = MC_GOAL.last().unwrap();
    assert!(last.4 && last.3 == -20.0);
    check_mc(MC_GOAL_START, MC_GOAL);
    let mut env = MountainCar::new(MountainCarConfig::default());
    env.reset_to(MountainCarState {
        position: MC_GOAL_START.0,
        velocity: MC_GOAL_START.1,
    });
    for _ in 0..MC_GOAL.len() {
        env.step(2).unwrap();
    }
    assert_eq!(env.step(2), Err(EnvError::EpisodeDone));
}

#[test]
fn cart_pole_balance() {
    assert_eq!(CP_BALANCE.len(), 20);
    check_cp(CP_BALANCE_START, CP_BALANCE);
}

#[test]
fn cart_pole_failure() {
    assert!(CP_FALL.last().unwrap().3);
    check_cp(CP_FALL_START, CP_FALL);
}

#[test]
fn cart_pole_bonus_replaces_step_reward() {
    let mut env = CartPole::new(CartPoleConfig {
        max_steps: 20,
        ..CartPoleConfig::default()
    });
    env.reset_to(CartPoleState {
        cart_position: CP_BALANCE_START[0],
        cart_velocity: CP_BALANCE_START[1],
        pole_angle: CP_BALANCE_START[2],
        pole_angular_velocity: CP_BALANCE_START[3],
    });
    let rewards: Vec<f64> = CP_BALANCE.iter().map(|r| env.step(r.0).unwrap().reward).collect();
    assert!(rewards[..19].iter().all(|&r| r == 1.0));
    assert_eq!(rewards[19], 160.0);

    let mut env = CartPole::new(CartPoleConfig {
        max_steps: 20,
        reward_mode: RewardMode::Standard,
        ..CartPoleConfig::default()
    });
    env.reset_to(CartPoleState {
        cart_position: CP_BALANCE_START[0],
        cart_velocity: CP_BALANCE_START[1],
        pole_angle: CP_BALANCE_START[2],
        pole_angular_velocity: CP_BALANCE_START[3],
    });
    assert!(CP_BALANCE.iter().all(|r| env.step(r.0).unwrap().reward == 1.0));
}
