"""Smoke test of the command line tool: play, simulate, evaluate, extract."""

import json
import pathlib
import subprocess
import sys
import tempfile

STAGES = ["Introduction", "Development", "Crisis", "Conclusion"]


def play_input() -> str:
    lines = []
    for name, definition in [("Troll", "His name is Grumble."), ("Lion", "His name is Leo."),
                             ("Mermaid", "Her name is Pearl.")]:
        lines += [name, definition]
    picks = {"Place": "Bridge", "Item": "Hat", "Emotion": "Sad"}
    for _ in STAGES:
        lines += ["Yes!", "Let's start!"]
        for element, label in picks.items():
            # A wrong label first: the tool must explain and ask again.
            lines += ["Dragon", label, f"The {label.lower()} is lovely."]
        lines.append("Yes, I liked it!")
    lines += ["The end!", "Let's play again!"]
    return "\n".join(lines) + "\n"


def run(cmd, **kw):
    return subprocess.run(cmd, capture_output=True, text=True, **kw)


def main() -> int:
    cli = sys.argv[1]
    failures = []

    def check(cond, what):
        if not cond:
            failures.append(what)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)

        p = run([cli, "play", "--lesson", "Do not lie", "--store", str(tmp / "store"), "--title", "Grumble"],
                input=play_input())
        check(p.returncode == 0, f"play exited {p.returncode}: {p.stderr}")
        check("saved story story-0001" in p.stdout, "play did not save the story")
        check(p.stdout.count("Options:") == 12, "wrong labels were not explained once per scan")
        check((tmp / "store/stories/story-0001.txt").exists(), "story text file missing")

        p = run([cli, "simulate", "--n", "2", "--seed", "4", "--out", str(tmp / "runs"), "--jobs", "2"])
        check(p.returncode == 0, f"simulate exited {p.returncode}: {p.stderr}")
        batch = tmp / "runs/s4-n2"
        check(sorted(x.name for x in batch.iterdir()) == ["4", "5"], "simulate output layout")

        (tmp / "mock.json").write_text(json.dumps({"moderation": {"violence": 0.0519},
                                                   "perspective": {"TOXICITY": 0.02}}))
        p = run([cli, "evaluate", "--runs", str(batch), "--judge", "--judge-backend", "template",
                 "--safety", "--mock-safety", str(tmp / "mock.json")])
        check(p.returncode == 0, f"evaluate exited {p.returncode}: {p.stderr}")
        check("0.0519 (±0.0000)" in p.stdout, "evaluate table lacks the Violence cell")
        report = json.loads((batch / "report.json").read_text())
        check(report["story_count"] == 2, "report story count")

        (tmp / "mock.json").write_text(json.dumps({"moderation": {"violence": 1.5}}))
        p = run([cli, "evaluate", "--runs", str(batch), "--safety", "--mock-safety", str(tmp / "mock.json")])
        check(p.returncode == 2 and "CategoryMappingError" in p.stderr, "out-of-range mock score accepted")

        p = run([cli, "evaluate", "--runs", str(tmp / "missing")])
        check(p.returncode != 0, "evaluate accepted a missing runs directory")

        corpus = tmp / "corpus"
        corpus.mkdir()
        (corpus / "a.txt").write_text("A fox lived in a forest.")
        p = run([cli, "extract", "--corpus", str(corpus), "--backend", "template", "--out", str(tmp / "ex.json")])
        check(p.returncode == 0, f"extract exited {p.returncode}: {p.stderr}")
        ex = json.loads((tmp / "ex.json").read_text())
        check(set(ex) == {"character", "place", "item", "emotion", "lessons"}, "extract output keys")

    for f in failures:
        print("FAIL:", f)
    print("ok" if not failures else f"{len(failures)} failures")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
