//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{BufRead, BufReader};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use ctxnav_core::command::{compile_commands, heading_changes, simulate_commands, CompileOptions};
use ctxnav_core::eval::synth::{corrupt_step, synthesize_transcript};
use ctxnav_core::eval::{appendix_reference_path, appendix_scenario, judge, EvalReport, Verdict, CRITERIA};
use ctxnav_core::field::{
    build_cost_field, dilate_region, oracle_cheapest_cost, plan_astar, zone_from_anchor, ContextZone, CostField, FlightPath,
    PlanError,
};
use ctxnav_core::map::{parse_map, GridCoord, GridMap, Obstacle};
use ctxnav_core::placement::{assign, estimate_latency, memory_feasible, ModelProfile, PlacementConfig, PlacementOutcome, Tier};
use ctxnav_service::{interpret_deterministic, MissionState, Phase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const APPENDIX_BUDGET: Duration = Duration::from_secs(1);
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const BENCH_BUDGET: Duration = Duration::from_secs(10);
const FUZZ_CASES: usize = 1000;
const FUZZ_MAX_SIDE: i32 = 40;
const FUZZ_MAX_OBSTACLES: usize = 10;
const FUZZ_MAX_ZONES: usize = 6;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ctxnav")
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn appendix_fixture() -> GridMap {
    let path = crate_dir().join("../core/fixtures/appendix_map.json");
    parse_map(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[derive(Clone, Copy, PartialEq)]
struct Node(f64, GridCoord);

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0)
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Plain Dijkstra over the cost field: entering a cell costs its value,
/// the start cell is free. `None` when the end is unreachable.
fn dijkstra(field: &CostField, start: GridCoord, end: GridCoord) -> Option<f64> {
    let (w, h) = (field.width(), field.height());
    let idx = |c: GridCoord| (c.y * w + c.x) as usize;
    let mut dist = vec![f64::INFINITY; (w * h) as usize];
    let mut heap = BinaryHeap::new();
    dist[idx(start)] = 0.0;
    heap.push(Node(0.0, start));
    while let Some(Node(d, c)) = heap.pop() {
        if c == end {
            return Some(d);
        }
        if d > dist[idx(c)] {
            continue;
        }
        for (dx, dy) in [(0, 1), (1, 0), (0, -1), (-1, 0)] {
            let n = GridCoord::new(c.x + dx, c.y + dy);
            if n.x < 0 || n.y < 0 || n.x >= w || n.y >= h {
                continue;
            }
            let step = field.cost(n);
            if !step.is_finite() {
                continue;
            }
            if d + step < dist[idx(n)] {
                dist[idx(n)] = d + step;
                heap.push(Node(d + step, n));
            }
        }
    }
    None
}

fn random_rect(rng: &mut ChaCha8Rng, w: i32, h: i32) -> (i32, i32, i32, i32) {
    let x1 = rng.random_range(0..w);
    let y1 = rng.random_range(0..h);
    let x2 = (x1 + rng.random_range(0..=w / 3)).min(w - 1);
    let y2 = (y1 + rng.random_range(0..=h / 3)).min(h - 1);
    (x1, y1, x2, y2)
}

fn random_map(rng: &mut ChaCha8Rng) -> (GridMap, Vec<ContextZone>) {
    let w = rng.random_range(2..=FUZZ_MAX_SIDE);
    let h = rng.random_range(2..=FUZZ_MAX_SIDE);
    let start = GridCoord::new(rng.random_range(0..w), rng.random_range(0..h));
    let mut end = start;
    while end == start {
        end = GridCoord::new(rng.random_range(0..w), rng.random_range(0..h));
    }
    let mut obstacles = Vec::new();
    for i in 0..rng.random_range(0..=FUZZ_MAX_OBSTACLES) {
        let (x1, y1, x2, y2) = random_rect(rng, w, h);
        let ob = Obstacle::new(format!("ob{i}"), x1, y1, x2, y2);
        if !ob.contains(start) && !ob.contains(end) {
            obstacles.push(ob);
        }
    }
    let map = GridMap::new(w, h, start, end, obstacles).unwrap();
    let zones = (0..rng.random_range(0..=FUZZ_MAX_ZONES))
        .map(|i| {
            let (x1, y1, x2, y2) = random_rect(rng, w, h);
            if rng.random_bool(0.5) {
                ContextZone::hard(format!("z{i}"), x1, y1, x2, y2)
            } else {
                ContextZone::soft(format!("z{i}"), x1, y1, x2, y2, f64::from(rng.random_range(1u32..=20)))
            }
        })
        .collect();
    (map, zones)
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin()).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn c1_appendix() -> Check {
    let t = Instant::now();
    let map = appendix_fixture();
    let field = build_cost_field(&map, &[]);
    let path = plan_astar(&field, map.start(), map.end()).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let reference = appendix_reference_path();
    let ref_cost = field.path_cost(&reference);
    ensure!(path.total_cost == 38.0, "cost {} != 38", path.total_cost);
    ensure!(path.waypoints.len() == 39, "{} waypoints != 39", path.waypoints.len());
    ensure!(path.is_four_connected(), "path is not 4-connected");
    ensure!(reference.len() == 39 && ref_cost == 38.0, "reference path: {} cells, cost {ref_cost}", reference.len());
    ensure!(dijkstra(&field, map.start(), map.end()) == Some(38.0), "independent oracle disagrees");
    ensure!(elapsed < APPENDIX_BUDGET, "took {elapsed:?}");
    let fixture = crate_dir().join("../core/fixtures/appendix_map.json");
    let (code, stdout, _) = run_cli(&["plan", "--map", fixture.to_str().unwrap()]);
    ensure!(code == 0 && stdout.starts_with("Total cost: 38\nWaypoints (39):"), "cli plan exit {code}: {stdout}");
    Ok(format!("cost 38, 39 waypoints, reference cost 38, {elapsed:?} < {APPENDIX_BUDGET:?}"))
}

fn c2_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let t = Instant::now();
    let (mut found, mut none, mut soft, mut hard) = (0, 0, 0, 0);
    for case in 0..FUZZ_CASES {
        let (map, zones) = random_map(&mut rng);
        soft += zones.iter().filter(|z| !z.is_hard()).count();
        hard += zones.iter().filter(|z| z.is_hard()).count();
        let field = build_cost_field(&map, &zones);
        let expected = dijkstra(&field, map.start(), map.end());
        let core_oracle = oracle_cheapest_cost(&field, map.start(), map.end()).ok();
        match plan_astar(&field, map.start(), map.end()) {
            Ok(p) => {
                found += 1;
                ensure!(Some(p.total_cost) == expected, "case {case}: A* {} vs oracle {expected:?}", p.total_cost);
                ensure!(core_oracle == expected, "case {case}: core oracle {core_oracle:?} vs {expected:?}");
                ensure!(field.path_cost(&p.waypoints) == p.total_cost, "case {case}: reported cost disagrees with path");
            }
            Err(PlanError::NoPath { .. }) => {
                none += 1;
                ensure!(expected.is_none(), "case {case}: A* found no path, oracle {expected:?}");
            }
            Err(e) => return Err(format!("case {case}: {e}")),
        }
    }
    let elapsed = t.elapsed();
    ensure!(elapsed < ORACLE_BUDGET, "took {elapsed:?}");
    ensure!(soft > 0 && hard > 0, "zone mix degenerate");
    Ok(format!(
        "{FUZZ_CASES} maps ({found} solvable, {none} blocked; {soft} soft, {hard} hard zones), exact equality, {elapsed:?} < {ORACLE_BUDGET:?}"
    ))
}

fn c3_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de);
    let side = FUZZ_MAX_SIDE;
    let map = GridMap::new(side, side, GridCoord::new(0, 0), GridCoord::new(side - 1, side - 1), vec![]).unwrap();
    let field = build_cost_field(&map, &[]);
    for case in 0..FUZZ_CASES {
        let mut c = GridCoord::new(rng.random_range(0..side), rng.random_range(0..side));
        let mut walk = vec![c];
        let moves = rng.random_range(1..=120);
        while walk.len() <= moves {
            let (dx, dy) = [(0, 1), (1, 0), (0, -1), (-1, 0)][rng.random_range(0..4)];
            let n = GridCoord::new(c.x + dx, c.y + dy);
            if map.in_bounds(n) {
                c = n;
                walk.push(c);
            }
        }
        let path = FlightPath::new(walk.clone(), &field);
        let seq = compile_commands(&path, CompileOptions::default()).map_err(|e| format!("case {case}: {e}"))?;
        let replayed = simulate_commands(&seq, walk[0], &map).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(replayed == walk, "case {case}: replay differs");
        ensure!(seq.forward_total() == (walk.len() - 1) as u64, "case {case}: forward sum");
        ensure!(seq.turn_count() == heading_changes(&walk), "case {case}: turn count");
    }
    Ok(format!("{FUZZ_CASES} random walks up to 120 moves: replay exact, forward sum and turn count match"))
}

fn c4_context() -> Check {
    let map = appendix_fixture();
    let school = map.obstacle("school").ok_or("no school")?;
    ensure!(
        (school.x1, school.y1, school.x2, school.y2) == (6, 9, 8, 11),
        "school at {:?}",
        (school.x1, school.y1, school.x2, school.y2)
    );
    let lunch = dilate_region(school, 2, &map);
    ensure!((lunch.x1, lunch.y1, lunch.x2, lunch.y2) == (4, 7, 10, 13), "lunch zone {lunch:?}");
    let flock = zone_from_anchor(GridCoord::new(13, 15), 3, &map);
    ensure!(flock.rect() == (12, 14, 14, 16), "flock zone {:?}", flock.rect());

    let lunch_zone = interpret_deterministic("avoid within 2 squares of school", &map).map_err(|e| e.to_string())?;
    let flock_zone =
        interpret_deterministic("flock of birds at (13, 15) covering about 3 grids", &map).map_err(|e| e.to_string())?;
    ensure!(lunch_zone[0].rect() == (4, 7, 10, 13), "interpreted lunch {:?}", lunch_zone[0].rect());
    ensure!(flock_zone[0].rect() == (12, 14, 14, 16), "interpreted flock {:?}", flock_zone[0].rect());

    let reference = appendix_reference_path();
    let lunch_ob = lunch_zone[0].to_obstacle();
    ensure!(reference.contains(&GridCoord::new(10, 7)), "reference path misses (10, 7)");
    ensure!(lunch_ob.contains(GridCoord::new(10, 7)), "(10, 7) outside lunch zone");

    let both: Vec<ContextZone> = lunch_zone.iter().chain(&flock_zone).cloned().collect();
    for (name, zones) in [("lunch", lunch_zone.clone()), ("flock", flock_zone.clone()), ("both", both)] {
        let field = build_cost_field(&map, &zones);
        let p = plan_astar(&field, map.start(), map.end()).map_err(|e| format!("{name}: {e}"))?;
        let oracle = dijkstra(&field, map.start(), map.end());
        ensure!(p.total_cost == 38.0 && oracle == Some(38.0), "{name}: A* {} oracle {oracle:?}", p.total_cost);
        for z in &zones {
            let ob = z.to_obstacle();
            ensure!(!p.waypoints.iter().any(|c| ob.contains(*c)), "{name}: re-plan enters {}", z.source_label);
        }
    }
    Ok("zones (4,7,10,13) and (12,14,14,16); re-plans cost 38 = oracle; reference hits (10, 7), re-plan avoids zone".into())
}

fn c5_self_consistency() -> Check {
    let s = appendix_scenario();
    let good = judge(&synthesize_transcript(&s), &s);
    ensure!(good.iter().all(|c| c.verdict == Verdict::Pass), "synthesized transcript: {good:?}");
    let bad = judge(&corrupt_step(synthesize_transcript(&s), 3), &s);
    let verdicts: Vec<Verdict> = bad.iter().map(|c| c.verdict).collect();
    ensure!(
        verdicts == [Verdict::Pass, Verdict::FormatError, Verdict::Pass, Verdict::Pass, Verdict::Pass],
        "brace-dropped row {verdicts:?}"
    );

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let providers = crate_dir().join("fixtures/providers_mock.json");
    let replay = crate_dir().join("fixtures/replay/appendix");
    let (code, stdout, stderr) = run_cli(&[
        "bench",
        "--providers",
        providers.to_str().unwrap(),
        "--scenario",
        "appendix",
        "--replay",
        replay.to_str().unwrap(),
        "--out",
        out,
    ]);
    ensure!(code == 0, "bench --replay exit {code}: {stderr}");
    ensure!(stdout.contains("| mock-perfect | ✓ | ✓ | ✓ | ✓ | ✓ |"), "replayed perfect row missing:\n{stdout}");
    ensure!(stdout.contains("| mock-brace-drop | ✓ | Format | ✓ | ✓ | ✓ |"), "replayed brace row missing:\n{stdout}");
    Ok("synthesized transcript 5/5 pass; step-3 brace drop gives [pass, format, pass, pass, pass]; replayed fixtures match".into())
}

fn c6_bench_scale() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let providers = crate_dir().join("fixtures/providers_mock.json");
    let t = Instant::now();
    let (code, _, stderr) = run_cli(&[
        "bench",
        "--providers",
        providers.to_str().unwrap(),
        "--scenario",
        "seed:40:40:10",
        "--out",
        out.to_str().unwrap(),
    ]);
    let elapsed = t.elapsed();
    ensure!(code == 0, "bench exit {code}: {stderr}");
    ensure!(elapsed < BENCH_BUDGET, "took {elapsed:?}");
    let report = EvalReport::from_json(&std::fs::read_to_string(out.join("report.json")).unwrap()).map_err(|e| e.to_string())?;
    ensure!((report.scenario.width, report.scenario.height, report.scenario.obstacles) == (40, 40, 10), "{:?}", report.scenario);
    ensure!(report.rows.len() == 2 && report.rows.iter().all(|r| r.results.len() == 5), "row shape");
    ensure!(
        report.row("mock-perfect").is_some_and(|r| r.results.iter().all(|c| c.verdict == Verdict::Pass)),
        "perfect mock not all-pass"
    );
    let md = std::fs::read_to_string(out.join("report.md")).unwrap();
    let header = format!("| Model | {} |", CRITERIA.join(" | "));
    ensure!(md.contains(&header), "markdown header missing");
    let table_rows: Vec<&str> = md.lines().filter(|l| l.starts_with("| mock-")).collect();
    ensure!(
        table_rows.len() == 2 && table_rows.iter().all(|l| l.matches('|').count() == 7),
        "table rows {table_rows:?}"
    );
    Ok(format!("40x40, 10 obstacles, 2 mock providers, 5 criterion columns, {elapsed:?} < {BENCH_BUDGET:?}"))
}

fn c7_placement() -> Check {
    let cfg = PlacementConfig::shipped_default();
    let topo = cfg.topology();
    let sizes = [0.5, 1.0, 6.0, 8.0, 70.0, 72.0, 175.0, 1000.0];
    for node in &topo.nodes {
        for task in &cfg.tasks {
            let lat: Vec<f64> = sizes
                .iter()
                .map(|&p| {
                    let m = ModelProfile {
                        name: format!("{p}b"),
                        params: Some(p),
                        context_tokens: 8192,
                        nation: String::new(),
                    };
                    estimate_latency(&m, node, task, &topo).unwrap()
                })
                .collect();
            ensure!(lat.windows(2).all(|w| w[0] < w[1]), "{} / {}: not strictly increasing {lat:?}", node.tier, task.name);
        }
    }
    let du = topo.node(Tier::DU).ok_or("no DU node")?;
    ensure!(cfg.bytes_per_param == 2.0 && du.memory_gb == 24.0, "defaults changed");
    let mut big = 0;
    for m in &cfg.models {
        match m.params {
            Some(p) if p <= 8.0 => ensure!(memory_feasible(m, du, 2.0).unwrap(), "{} should fit DU", m.name),
            Some(p) if p >= 70.0 => {
                big += 1;
                ensure!(!memory_feasible(m, du, 2.0).unwrap(), "{} should not fit DU", m.name);
            }
            _ => {}
        }
    }
    ensure!(big >= 4, "expected the 70B+ registry entries");
    let report = assign(&cfg.models, &cfg.tasks, &topo, cfg.bytes_per_param);
    let moonshot: Vec<_> = report.entries.iter().filter(|e| e.model.starts_with("Moonshot")).collect();
    ensure!(
        !moonshot.is_empty() && moonshot.iter().all(|e| e.outcome == PlacementOutcome::Unassessable),
        "Moonshot entries {moonshot:?}"
    );
    let (code, stdout, _) = run_cli(&["place", "--config", "defaults"]);
    ensure!(code == 0, "place exit {code}");
    ensure!(stdout.contains("| Llama3:8b | 8 | no | yes | yes |"), "8B row:\n{stdout}");
    ensure!(stdout.contains("| Llama3:70b | 70 | no | no | yes |"), "70B row:\n{stdout}");
    ensure!(stdout.contains("| Moonshot v1-8k | xapp_tactical | 0.1 | unassessable"), "Moonshot row:\n{stdout}");
    Ok("latency strictly monotone on all tiers and tasks; 8B fits DU (24 GB, 2 B/param), 70B+ do not; Moonshot unassessable".into())
}

struct Server(Child, String);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn start_server() -> Server {
    let mut child = Command::new(bin())
        .args(["serve", "--addr", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let base = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("unexpected banner {line:?}")).to_string();
    Server(child, base)
}

fn post_json(url: &str, body: &str) -> (u16, String) {
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let mut resp = agent.post(url).content_type("application/json").send(body).unwrap();
    (resp.status().as_u16(), resp.body_mut().read_to_string().unwrap())
}

fn get_state(base: &str, id: &str) -> MissionState {
    let mut resp = ureq::get(&format!("{base}/missions/{id}")).call().unwrap();
    resp.body_mut().read_json().unwrap()
}

fn c8_service() -> Check {
    let server = start_server();
    let base = &server.1;
    let map_text = std::fs::read_to_string(crate_dir().join("../core/fixtures/appendix_map.json")).unwrap();
    let (status, body) = post_json(&format!("{base}/missions"), &map_text);
    ensure!(status == 201, "create: {status} {body}");
    let id = serde_json::from_str::<serde_json::Value>(&body).unwrap()["mission_id"].as_str().unwrap().to_string();

    let (status, _) = post_json(&format!("{base}/missions/{id}/step"), "");
    ensure!(status == 200, "takeoff status {status}");
    let (status, _) = post_json(&format!("{base}/missions/{id}/step"), "");
    ensure!(status == 200, "first move status {status}");

    let before = get_state(base, &id);
    let (status, body) = post_json(
        &format!("{base}/missions/{id}/context"),
        r#"{"utterance":"avoid within 2 squares of the hospital"}"#,
    );
    ensure!(status == 422, "bad utterance gave {status}: {body}");
    let after = get_state(base, &id);
    ensure!(
        serde_json::to_value(&before).unwrap() == serde_json::to_value(&after).unwrap(),
        "failed context changed the mission"
    );

    let mut airborne = 1;
    let mut state = after;
    while state.phase == Phase::Airborne {
        let (status, body) = post_json(&format!("{base}/missions/{id}/step"), "");
        ensure!(status == 200, "step {airborne}: {status} {body}");
        state = serde_json::from_str(&body).unwrap();
        airborne += 1;
        ensure!(airborne <= 100, "mission never lands");
    }
    ensure!(state.phase == Phase::Landed && airborne == 38, "{airborne} airborne steps, phase {:?}", state.phase);
    let (status, _) = post_json(&format!("{base}/missions/{id}/step"), "");
    ensure!(status == 409, "step after landing gave {status}");

    let visited = state.visited();
    let replay = simulate_commands(&state.command_log, state.map.start(), &state.map).map_err(|e| e.to_string())?;
    ensure!(replay == visited && visited.len() == 39, "replay {} cells vs visited {}", replay.len(), visited.len());
    Ok("38 airborne steps over HTTP, failed context leaves state byte-identical, command log replays visited cells".into())
}

fn main() {
    let checks: [Criterion; 8] = [
        ("appendix reproduction", c1_appendix),
        ("oracle equivalence", c2_oracle),
        ("round-trip compilation", c3_round_trip),
        ("context scenarios", c4_context),
        ("harness self-consistency", c5_self_consistency),
        ("benchmark scale", c6_bench_scale),
        ("placement properties", c7_placement),
        ("service contract", c8_service),
    ];
    let mut failed = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
