"use strict";

const CHOICES = [
  ["ACHIEVEMENT", "Achievement"],
  ["ACTION", "Action"],
  ["FEELING", "Feeling"],
  ["TRAIT", "Trait"],
  ["POSSESSION", "Possession"],
  ["AFFILIATION", "Affiliation"],
  ["NOT_BRAGGING", "Not bragging"],
  ["NOT_AVAILABLE", "Not available"],
];

const $ = (id) => document.getElementById(id);
let annotator = null;
let current = null;
let busy = false;
let done = 0;

function banner(text, warn) {
  const b = $("banner");
  b.hidden = !text;
  b.textContent = text || "";
  b.className = warn ? "warn" : "";
}

function setChoices(enabled) {
  for (const b of $("choices").querySelectorAll("button")) b.disabled = !enabled;
}

async function loadTask() {
  current = null;
  setChoices(false);
  $("post").hidden = true;
  $("status").textContent = "Loading...";
  let res;
  try {
    res = await fetch(`/api/tasks/next?annotator=${encodeURIComponent(annotator)}`);
  } catch (e) {
    banner("Service unreachable. Retrying...");
    setTimeout(loadTask, 3000);
    return;
  }
  if (res.status === 204) {
    $("status").textContent = "Queue empty. Thank you!";
    return;
  }
  if (!res.ok) {
    banner(`Server error ${res.status}. Retrying...`);
    setTimeout(loadTask, 3000);
    return;
  }
  banner("");
  current = await res.json();
  $("status").textContent = `Post ${current.id}`;
  $("post").textContent = current.text;
  $("post").hidden = false;
  setChoices(true);
}

async function submit(label) {
  if (!current || busy) return;
  busy = true;
  setChoices(false);
  const record = {
    post_id: current.id,
    annotator_id: annotator,
    label,
    round: Number($("round").value) || 1,
    submitted_at: new Date().toISOString(),
  };
  try {
    const res = await fetch("/api/labels", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(record),
    });
    if (res.status === 201) {
      done += 1;
      $("progress").textContent = `${done} labelled this session`;
      await loadTask();
    } else if (res.status === 409) {
      banner("This post already has your label for this round.", true);
      await loadTask();
    } else {
      const body = await res.json().catch(() => ({}));
      banner(body.error || `Rejected (${res.status})`);
      setChoices(true);
    }
  } catch (e) {
    banner("Network error; your label was not saved. Try again.");
    setChoices(true);
  } finally {
    busy = false;
  }
}

function fmt(x) {
  return x === null || x === undefined ? "n/a" : Number(x).toFixed(3);
}

async function refreshStats() {
  try {
    const [a, l] = await Promise.all([
      fetch("/api/stats/agreement").then((r) => r.json()),
      fetch("/api/stats/labels").then((r) => r.json()),
    ]);
    const rows = [
      ["Percentage agreement", a.percent_agreement === null ? "n/a" : Number(a.percent_agreement).toFixed(2)],
      ["Alpha (7-class)", fmt(a.alpha_7class)],
      ["Alpha (binary)", fmt(a.alpha_binary)],
      ["Items", a.n_items],
      ["Adjudication queue", l.adjudication_queue],
    ];
    for (const [k, v] of Object.entries(l.label_counts)) rows.push([k, v]);
    const dl = $("stats");
    dl.replaceChildren();
    for (const [k, v] of rows) {
      const dt = document.createElement("dt");
      dt.textContent = k;
      const dd = document.createElement("dd");
      dd.textContent = v;
      dl.append(dt, dd);
    }
    $("stale").hidden = true;
  } catch (e) {
    $("stale").hidden = false;
  }
}

function init() {
  CHOICES.forEach(([value, name], i) => {
    const b = document.createElement("button");
    b.type = "button";
    b.textContent = `${i + 1}. ${name}`;
    b.disabled = true;
    b.addEventListener("click", () => submit(value));
    $("choices").append(b);
  });
  document.addEventListener("keydown", (e) => {
    if (e.target.tagName === "INPUT") return;
    const i = Number(e.key) - 1;
    if (i >= 0 && i < CHOICES.length) submit(CHOICES[i][0]);
  });
  $("login").addEventListener("submit", async (e) => {
    e.preventDefault();
    annotator = $("annotator").value.trim();
    if (!annotator) return;
    await fetch("/api/annotators", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ id: annotator }),
    });
    await loadTask();
  });
  $("refresh").addEventListener("click", refreshStats);
  fetch("/api/guidelines")
    .then((r) => r.text())
    .then((t) => ($("guidelines").textContent = t));
  refreshStats();
}

init();
