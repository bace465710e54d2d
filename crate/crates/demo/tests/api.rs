use numasched_demo::api::{simulate_json, upward_ranks_json, validate_offsets_json};
use serde_json::Value;

const TEST4: &str = "strict digraph {
    root [size=2];
    end [size=2];
    Task_1 [size=10];
    Task_2 [size=10];
    Task_3 [size=10];
    root -> Task_1 [size=2];
    root -> Task_2 [size=2];
    Task_1 -> Task_3 [size=10];
    Task_2 -> Task_3 [size=20];
    Task_3 -> end [size=2];
}";

const TEST4_SETTINGS: &str = r#"{
    "scheduler": "fifo",
    "scheduler_params": ["fifo_prioritize_by_core_id=yes", "fifo_prioritize_by_exec_order=yes"],
    "core_avail_mask": "0x1000001",
    "cores_per_numa": 24,
    "flops_per_cycle": 1000000,
    "clock_frequency_hz": 1,
    "latency_ns": [[0, 0], [0, 0]],
    "bandwidth_gbps": [[0.005, 0.002], [0.002, 0.005]]
}"#;

fn golden() -> String {
    std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/golden/fifo_test4_output.yaml"
    ))
    .unwrap()
}

#[test]
fn simulate_reproduces_golden_trace() {
    let v: Value = serde_json::from_str(&simulate_json(TEST4, TEST4_SETTINGS).unwrap()).unwrap();
    assert_eq!(v["makespan"], 29.0);
    assert_eq!(v["scheduler"], "fifo");
    assert_eq!(v["cores"], serde_json::json!([0, 24]));
    assert_eq!(
        v["order"],
        serde_json::json!(["Task_1", "Task_2", "Task_3"])
    );
    assert_eq!(v["trace_yaml"].as_str().unwrap(), golden());
    let t3 = &v["tasks"][2];
    assert_eq!(
        (t3["core"].as_u64(), t3["compute_start"].as_f64()),
        (Some(24), Some(19.0))
    );
    assert_eq!(t3["reads"].as_array().unwrap().len(), 2);
}

#[test]
fn ranks_are_sorted_highest_first() {
    let settings = TEST4_SETTINGS.replace("\"fifo\"", "\"heft\"");
    let v: Value = serde_json::from_str(&upward_ranks_json(TEST4, &settings).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2]["name"], "Task_3");
    assert_eq!(rows[2]["rank"], 10.0);
    let ranks: Vec<f64> = rows.iter().map(|r| r["rank"].as_f64().unwrap()).collect();
    assert!(ranks.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn validator_flags_hand_edits() {
    let ok: Value = serde_json::from_str(&validate_offsets_json(&golden()).unwrap()).unwrap();
    assert_eq!(ok["passed"], true);
    let bad = golden().replace("Task_3: {start: 14, end: 29", "Task_3: {start: 14, end: 31");
    let v: Value = serde_json::from_str(&validate_offsets_json(&bad).unwrap()).unwrap();
    assert_eq!(v["passed"], false);
    assert!(v["findings"][0]
        .as_str()
        .unwrap()
        .starts_with("offset-violation"));
}

#[test]
fn bad_input_is_an_error_string() {
    assert!(simulate_json("digraph {", TEST4_SETTINGS).is_err());
    assert!(simulate_json(TEST4, "{}").is_err());
    let unknown = TEST4_SETTINGS.replace("\"fifo\"", "\"lottery\"");
    assert!(simulate_json(TEST4, &unknown)
        .unwrap_err()
        .contains("lottery"));
    assert!(validate_offsets_json("user: {}").is_err());
}
