#!/usr/bin/env python3
# scripts/make_demo_corpus.py
#
# Copyright 2026  The audkit authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
# WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
# MERCHANTABLITY OR NON-INFRINGEMENT.
# See the Apache 2 License for the specific language governing permissions and
# limitations under the License.

"""Generate a small synthetic syllable corpus for driving the audkit CLI.

Each utterance concatenates syllable-like tokens drawn from a few harmonic
"templates" (attack / steady / release envelope over a fixed fundamental),
separated by near-silent gaps.  Alongside the wav files the script writes:

  manifest.csv     utterance_id,path,split rows (train_unit + test)
  reference.jsonl  per-utterance labeled intervals (for `audkit eval --reference`)
  triplets.jsonl   ABX triplets over test syllables (for `audkit eval --triplets`)

Everything is deterministic for a fixed --seed.
"""

import argparse
import json
import wave
from pathlib import Path

import numpy as np


def synth_syllable(kind: int, rate: int, rng: np.random.Generator) -> np.ndarray:
    """One syllable of template `kind`: glide-in attack, steady core, release."""
    f0 = 280.0 * (kind + 1) + 60.0 * kind
    dur = 0.24 + 0.04 * rng.random()
    n = int(round(dur * rate))
    t = np.arange(n) / rate

    attack = int(0.25 * n)
    release = int(0.25 * n)
    env = np.ones(n)
    env[:attack] = np.linspace(0.0, 1.0, attack, endpoint=False)
    env[n - release:] = np.linspace(1.0, 0.0, release, endpoint=False)

    # The fundamental glides from 0.75*f0 up to f0 across the attack.
    freq = np.full(n, f0)
    freq[:attack] = f0 * (0.75 + 0.25 * np.arange(attack) / max(attack, 1))
    phase = 2.0 * np.pi * np.cumsum(freq) / rate
    tone = 0.35 * np.sin(phase) + 0.25 * np.sin(2 * phase) + 0.10 * np.sin(3 * phase)
    del t
    return (env * tone).astype(np.float64)


def silence(duration_s: float, rate: int, rng: np.random.Generator) -> np.ndarray:
    n = int(round(duration_s * rate))
    return 4e-4 * (rng.random(n) - 0.5)


def write_wav(path: Path, samples: np.ndarray, rate: int) -> None:
    pcm = np.clip(samples, -1.0, 1.0)
    pcm = (pcm * 32767.0).round().astype(np.int16)
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(pcm.tobytes())


def build_utterance(types, rate, rng):
    """Returns (samples, intervals) with intervals as (start_s, end_s, label)."""
    pieces = [silence(0.18, rate, rng)]
    cursor = len(pieces[0])
    intervals = []
    for kind in types:
        syl = synth_syllable(kind, rate, rng)
        intervals.append((cursor / rate, (cursor + len(syl)) / rate, f"T{kind}"))
        pieces.append(syl)
        cursor += len(syl)
        gap = silence(0.14 + 0.04 * rng.random(), rate, rng)
        pieces.append(gap)
        cursor += len(gap)
    pieces.append(silence(0.18, rate, rng))
    return np.concatenate(pieces), intervals


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--types", type=int, default=3, help="number of syllable templates")
    ap.add_argument("--train", type=int, default=8, help="train_unit utterances")
    ap.add_argument("--test", type=int, default=2, help="test utterances")
    ap.add_argument("--syllables", type=int, default=4, help="syllables per utterance")
    ap.add_argument("--rate", type=int, default=16000, help="sample rate in Hz")
    ap.add_argument("--triplets", type=int, default=60, help="ABX triplets to draw")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    manifest_rows = []
    reference_rows = []
    test_occurrences = []  # (utterance_id, start_s, end_s, kind)

    index = 0
    for split, count, stem in (("train_unit", args.train, "utt"),
                               ("test", args.test, "tst")):
        for i in range(count):
            types = [(index * args.syllables + s) % args.types
                     for s in range(args.syllables)]
            samples, intervals = build_utterance(types, args.rate, rng)
            utt_id = f"{stem}{i:03d}"
            path = out / f"{utt_id}.wav"
            write_wav(path, samples, args.rate)
            manifest_rows.append(f"{utt_id},{path.name},{split}")
            reference_rows.append(json.dumps({
                "utterance_id": utt_id,
                "intervals": [{"start_s": round(s, 6), "end_s": round(e, 6),
                               "label": lab} for s, e, lab in intervals],
            }))
            if split == "test":
                for (s, e, lab), kind in zip(intervals, types):
                    test_occurrences.append((utt_id, s, e, kind))
            index += 1

    (out / "manifest.csv").write_text(
        "utterance_id,path,split\n" + "\n".join(manifest_rows) + "\n")
    (out / "reference.jsonl").write_text("\n".join(reference_rows) + "\n")

    # ABX triplets: a and x share a template, b comes from a different one.
    by_kind = {}
    for occ in test_occurrences:
        by_kind.setdefault(occ[3], []).append(occ)
    kinds = [k for k, v in by_kind.items() if len(v) >= 2]
    triplet_rows = []
    if len(kinds) >= 2 and args.triplets > 0:
        side = lambda occ: {"utterance_id": occ[0],
                            "start_s": round(occ[1], 6), "end_s": round(occ[2], 6)}
        for _ in range(args.triplets):
            ka = kinds[rng.integers(len(kinds))]
            kb = ka
            while kb == ka:
                kb = kinds[rng.integers(len(kinds))]
            x, a = (by_kind[ka][j] for j in
                    rng.choice(len(by_kind[ka]), size=2, replace=False))
            b = by_kind[kb][rng.integers(len(by_kind[kb]))]
            triplet_rows.append(json.dumps({"a": side(a), "b": side(b), "x": side(x)}))
        (out / "triplets.jsonl").write_text("\n".join(triplet_rows) + "\n")

    total = args.train + args.test
    print(f"wrote {total} wav files, manifest.csv, reference.jsonl"
          + (", triplets.jsonl" if triplet_rows else "") + f" under {out}")
    print("next: audkit discover --model <dir> --manifest", out / "manifest.csv")


if __name__ == "__main__":
    main()
