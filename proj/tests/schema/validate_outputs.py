"""Runs every CLI command on a tiny corpus and validates each JSON it emits."""
import json
import os
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema
from referencing import Registry, Resource

SER, SCHEMAS = Path(sys.argv[1]), Path(sys.argv[2])

resources = []
for p in SCHEMAS.glob("*.schema.json"):
    doc = json.loads(p.read_text())
    resources.append((doc["$id"], Resource.from_contents(doc)))
registry = Registry().with_resources(resources)
validators = {}
failures = 0
checked = 0


def check(doc, schema):
    global failures, checked
    if schema not in validators:
        doc_schema = json.loads((SCHEMAS / f"{schema}.schema.json").read_text())
        validators[schema] = jsonschema.Draft202012Validator(doc_schema, registry=registry)
    errors = list(validators[schema].iter_errors(doc))
    checked += 1
    for e in errors:
        failures += 1
        print(f"FAIL {schema}: {'/'.join(map(str, e.absolute_path))}: {e.message}")


def check_text(text, schema):
    lines = [l for l in text.splitlines() if l.strip()]
    assert lines, f"no output for {schema}"
    for line in lines:
        check(json.loads(line), schema)


def ser(*args, expect=0):
    r = subprocess.run([str(SER), *map(str, args)], capture_output=True, text=True, env=env)
    if r.returncode != expect:
        sys.exit(f"{args[0]}: exit {r.returncode}, expected {expect}\n{r.stderr}")
    return r


with tempfile.TemporaryDirectory() as tmp:
    t = Path(tmp)
    env = dict(os.environ, SER_OUTPUT_ROOT=str(t / "out"))
    small = ["--speakers", 10, "--per-speaker", 4, "--min-duration", 1, "--max-duration", 2]
    quick = ["--seed", 3, "--epochs", 1, "--channels", 4]

    check_text(ser("synth", "--out", t / "A", *small).stdout, "synth_summary")
    ser("synth", "--out", t / "B", "--prefix", "sb", "--seed", 9, *small)
    ser("synth", "--out", t / "C", "--preset", "cemo-like", "--speakers", 6, "--per-speaker", 5, "--agreement", 0.8)
    a, b = t / "A" / "manifest.jsonl", t / "B" / "manifest.jsonl"
    for m in (a, b, t / "C" / "manifest.jsonl"):
        check_text(m.read_text(), "manifest_record")

    check_text(ser("featurize", "--manifest", a).stdout, "featurize_summary")
    check_text(ser("stats", "--manifest", t / "C" / "manifest.jsonl").stdout, "stats")
    check(json.loads((t / "out" / "stats" / "stats.json").read_text()), "stats")

    check_text(ser("crossval", "--manifest", a, "--out", t / "cv", *quick).stdout, "crossval_summary")
    check(json.loads((t / "cv" / "report.json").read_text()), "crossval_report")
    for fold in sorted((t / "cv").glob("fold[0-9]*")):
        check(json.loads((fold / "model.json").read_text()), "model_bundle")
        check_text((fold / "train_log.jsonl").read_text(), "train_log_record")

    check_text(ser("train", "--manifest", a, "--out", t / "m", *quick).stdout, "train_report")
    check(json.loads((t / "m" / "train.json").read_text()), "train_report")
    check(json.loads((t / "m" / "model.json").read_text()), "model_bundle")
    check_text((t / "m" / "train_log.jsonl").read_text(), "train_log_record")

    check_text(ser("eval", "--manifest", b, "--model", t / "m", "--out", t / "ev").stdout, "eval_report")
    check(json.loads((t / "ev" / "report.json").read_text()), "eval_report")

    r = ser("crosscorpus", "--train-manifest", a, "--test-manifest", b, "--out", t / "xc", *quick)
    check_text(r.stdout, "cross_corpus_summary")
    check(json.loads((t / "xc" / "report.json").read_text()), "cross_corpus_report")

    check_text(ser("gradcheck").stdout, "gradcheck")
    check(json.loads((t / "out" / "gradcheck" / "gradcheck.json").read_text()), "gradcheck")

    check_text(ser("gradcheck", "--tolerance", "1e-15", expect=3).stderr, "error_record")
    check_text(ser("stats", "--manifest", t / "missing.jsonl", expect=2).stderr, "error_record")
    check_text(ser("crossval", "--manifest", a, expect=1).stderr, "error_record")

    (t / "A" / "wav" / "spk000_0000.wav").write_bytes(b"junk")
    (t / "A" / "features" / "spk000_0000.serf").unlink()
    r = ser("featurize", "--manifest", a, expect=2)
    check_text(r.stdout, "featurize_summary")
    check_text(r.stderr, "error_record")

print(f"{checked} documents checked, {failures} schema violations")
sys.exit(1 if failures else 0)
