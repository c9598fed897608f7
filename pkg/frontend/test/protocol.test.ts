import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { decodeFrame, encodeFrame, g17, FrameCodecError } from "../src/protocol.js";

const HERE = __dirname;

describe("g17 float formatting", () => {
  it("matches the reference %.17g corpus", () => {
    const corpus = JSON.parse(readFileSync(join(HERE, "g17_corpus.json"), "utf-8"));
    for (const entry of corpus) {
      const v = entry.value as number;
      if (v === 0) {
        expect(g17(v)).toBe("0"); // encoder folds ±0 to "0"
      } else {
        expect(g17(v), `value ${v}`).toBe(entry.g17);
      }
    }
  });

  it("rejects non-finite numbers", () => {
    expect(() => g17(NaN)).toThrow(FrameCodecError);
    expect(() => g17(Infinity)).toThrow(FrameCodecError);
  });
});

describe("canonical codec", () => {
  it("spec ping bytes", () => {
    expect(encodeFrame({ op: "ping", topic: "", seq: 0, stamp_tx: 1.5, msg: null }))
      .toBe('{"op":"ping","topic":"","seq":0,"stamp_tx":1.5,"msg":null}');
  });

  it("reproduces the shared golden file byte for byte", () => {
    const lines = readFileSync(join(HERE, "frames.jsonl"), "utf-8").trim().split("\n");
    for (const line of lines) {
      const frame = decodeFrame(line);
      expect(encodeFrame(frame)).toBe(line);
    }
  });

  it("round-trips a randomized frame population", () => {
    let state = 42;
    const rand = () => {
      // xorshift keeps the test deterministic across runs
      state ^= state << 13; state ^= state >>> 17; state ^= state << 5;
      return ((state >>> 0) / 0xffffffff) * 2 - 1;
    };
    for (let i = 0; i < 2000; i++) {
      const frame = {
        op: "publish" as const,
        topic: "/servo",
        seq: i,
        stamp_tx: rand() * 1e4,
        msg: {
          position: [rand(), rand() * 100, rand() * 1e-5] as [number, number, number],
          euler: [rand(), rand(), rand()] as [number, number, number],
          velocity: [rand() * 10, rand() * 10, rand() * 10] as [number, number, number],
        },
      };
      const text = encodeFrame(frame);
      const back = decodeFrame(text);
      expect(back).toEqual(frame);
      expect(encodeFrame(back)).toBe(text);
    }
  });

  it("rejects malformed frames without throwing raw JSON errors", () => {
    expect(() => decodeFrame("{nope")).toThrow(FrameCodecError);
    expect(() => decodeFrame('{"op":"yodel","topic":"","seq":0,"stamp_tx":0,"msg":null}'))
      .toThrow(FrameCodecError);
    expect(() => decodeFrame('{"op":"publish","topic":"/servo","seq":0,"stamp_tx":0,"msg":{"position":[1,2],"euler":[0,0,0],"velocity":[0,0,0]}}'))
      .toThrow(FrameCodecError);
  });

  it("command variants encode with fixed key order", () => {
    expect(encodeFrame({
      op: "publish", topic: "/teleop", seq: 3, stamp_tx: 2,
      msg: { kind: "nudge", delta: [0.5, 0, 0], dyaw: 0.1 },
    })).toBe('{"op":"publish","topic":"/teleop","seq":3,"stamp_tx":2,"msg":{"kind":"nudge","delta":[0.5,0,0],"dyaw":0.10000000000000001}}');
    expect(encodeFrame({
      op: "publish", topic: "/teleop", seq: 4, stamp_tx: 2, msg: { kind: "grasp" },
    })).toBe('{"op":"publish","topic":"/teleop","seq":4,"stamp_tx":2,"msg":{"kind":"grasp"}}');
  });
});
