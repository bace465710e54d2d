import init, { simulate, upward_ranks, validate_offsets } from "./pkg/numasched_demo.js";

const $ = (id) => document.getElementById(id);

const PRESETS = {
  fifo4: {
    dot: `strict digraph {
    root    [size=2];
    end     [size=2];

    Task_1  [size=10];
    Task_2  [size=10];
    Task_3  [size=10];

    root -> Task_1  [size=2];
    root -> Task_2  [size=2];

    Task_1 -> Task_3  [size=10];
    Task_2 -> Task_3  [size=20];

    Task_3 -> end   [size=2];
}`,
    settings: {
      scheduler: "fifo",
      scheduler_params: ["fifo_prioritize_by_core_id=yes", "fifo_prioritize_by_exec_order=yes"],
      core_avail_mask: "0x1000001",
      cores_per_numa: 24,
      flops_per_cycle: 1000000,
      clock_frequency_hz: 1,
      latency_ns: [[0, 0], [0, 0]],
      bandwidth_gbps: [[0.005, 0.002], [0.002, 0.005]],
    },
  },
  numa: {
    dot: `strict digraph {
    root   [size=2];
    end    [size=2];

    Task_1 [size=160];
    Task_2 [size=320];
    Task_3 [size=80];

    root -> Task_1 [size=2];
    root -> Task_2 [size=2];
    Task_1 -> Task_3 [size=80];
    Task_2 -> Task_3 [size=80];
    Task_3 -> end  [size=2];
}`,
    settings: {
      scheduler: "heft",
      core_avail_mask: "0x3",
      flops_per_cycle: 1000000,
      clock_frequency_hz: 1,
      latency_ns: [[0, 0], [0, 0]],
      bandwidth_gbps: [[0.004, 0.002], [0.002, 0.004]],
    },
  },
  minmin: {
    dot: `strict digraph {
    root   [size=2];
    end    [size=2];

    Task_1 [size=80];
    Task_2 [size=160];
    Task_3 [size=320];

    root -> Task_1 [size=2];
    root -> Task_2 [size=2];
    root -> Task_3 [size=2];
    Task_1 -> end  [size=2];
    Task_2 -> end  [size=2];
    Task_3 -> end  [size=2];
}`,
    settings: {
      scheduler: "min-min",
      core_avail_mask: "0xf",
      flops_per_cycle: 1000000,
      clock_frequency_hz: [1, 2, 4, 8],
      latency_ns: [[0]],
      bandwidth_gbps: [[1]],
    },
  },
};

function loadPreset(name) {
  const p = PRESETS[name];
  $("dot").value = p.dot;
  $("settings").value = JSON.stringify(p.settings, null, 2);
}

function status(text, ok) {
  $("status").textContent = text;
  $("status").className = ok ? "pass" : "fail";
}

const PHASES = { read: "#8ab4f8", compute: "#f4b400", write: "#81c995" };

function drawGantt(result) {
  const canvas = $("gantt");
  const ctx = canvas.getContext("2d");
  const cores = result.cores;
  const rowH = 34, left = 70, top = 10, right = 20;
  canvas.height = top + rowH * cores.length + 30;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const span = Math.max(result.makespan, 1e-9);
  const x = (t) => left + (t / span) * (canvas.width - left - right);
  ctx.font = "12px sans-serif";
  cores.forEach((core, i) => {
    ctx.fillStyle = "#333";
    ctx.fillText(`core ${core}`, 6, top + i * rowH + rowH / 2 + 4);
  });
  for (const task of result.tasks) {
    const y = top + cores.indexOf(task.core) * rowH + 4;
    const bar = (from, to, color) => {
      ctx.fillStyle = color;
      ctx.fillRect(x(from), y, Math.max(x(to) - x(from), 1), rowH - 8);
    };
    bar(task.start, task.end, "#eee");
    for (const r of task.reads) bar(r.start, r.end, PHASES.read);
    bar(task.compute_start, task.compute_end, PHASES.compute);
    for (const w of task.writes) bar(w.start, w.end, PHASES.write);
    ctx.strokeStyle = "#555";
    ctx.strokeRect(x(task.start), y, Math.max(x(task.end) - x(task.start), 1), rowH - 8);
    ctx.fillStyle = "#000";
    ctx.fillText(task.name, x(task.start) + 3, y + rowH / 2);
  }
  const axisY = top + rowH * cores.length + 16;
  ctx.fillStyle = "#333";
  ctx.fillText("0", x(0), axisY);
  ctx.fillText(`${result.makespan} µs`, x(span) - 40, axisY);
}

function onSimulate() {
  try {
    const result = JSON.parse(simulate($("dot").value, $("settings").value));
    drawGantt(result);
    $("trace").value = result.trace_yaml;
    $("findings").textContent = "";
    status(`${result.scheduler}: makespan ${result.makespan}, order ${result.order.join(" → ")}`, true);
  } catch (e) {
    status(String(e), false);
  }
}

function onRanks() {
  try {
    const rows = JSON.parse(upward_ranks($("dot").value, $("settings").value));
    const body = rows
      .map((r) => `<tr><td style="text-align:left">${r.name}</td><td>${r.rank.toFixed(3)}</td><td>${r.level}</td><td>${r.sibling}</td></tr>`)
      .join("");
    $("ranktable").innerHTML = `<table><tr><th>task</th><th>upward rank</th><th>level</th><th>sibling</th></tr>${body}</table>`;
    status("ranks computed", true);
  } catch (e) {
    status(String(e), false);
  }
}

function onCheck() {
  try {
    const report = JSON.parse(validate_offsets($("trace").value));
    $("findings").textContent = report.passed ? "PASS" : report.findings.join("\n");
    status(report.passed ? "offsets consistent" : `${report.findings.length} findings`, report.passed);
  } catch (e) {
    status(String(e), false);
  }
}

await init();
$("preset").addEventListener("change", (e) => loadPreset(e.target.value));
$("run").addEventListener("click", onSimulate);
$("ranks").addEventListener("click", onRanks);
$("check").addEventListener("click", onCheck);
loadPreset("fifo4");
onSimulate();
