import { describe, expect, it } from "vitest";
import { parseResults, SchemaError } from "../src/csv.js";
import { FIXTURES, HEADER } from "./fixtures.js";

describe("parseResults", () => {
  it("parses a valid table into typed rows", () => {
    const rows = parseResults(FIXTURES.runtime_compare);
    expect(rows).toHaveLength(4);
    expect(rows[0]).toEqual({
      experiment: "runtime_compare",
      policy: "pso",
      sweep: "20",
      seed: 0,
      metric: "seconds",
      value: 0.15,
    });
    expect(typeof rows[1].seed).toBe("number");
    expect(typeof rows[1].value).toBe("number");
  });

  it("accepts any column order", () => {
    const text =
      "value,seed,metric,policy,experiment,sweep\n" +
      "0.5,3,energy,pso,oracle_check,7\n";
    const rows = parseResults(text);
    expect(rows).toEqual([
      {
        experiment: "oracle_check",
        policy: "pso",
        sweep: "7",
        seed: 3,
        metric: "energy",
        value: 0.5,
      },
    ]);
  });

  it("rejects empty input", () => {
    expect(() => parseResults("")).toThrow(SchemaError);
    expect(() => parseResults("\n\n")).toThrow(/empty input/);
  });

  it("names every missing column", () => {
    const text = "experiment,policy,sweep,metric\na,b,c,d\n";
    expect(() => parseResults(text)).toThrow(/missing columns: seed, value/);
  });

  it("names unknown columns", () => {
    const text = HEADER + ",bonus\na,b,c,0,m,1,x\n";
    expect(() => parseResults(text)).toThrow(/unknown columns: bonus/);
  });

  it("rejects rows with the wrong field count", () => {
    const text = HEADER + "\na,b,c,0,m\n";
    expect(() => parseResults(text)).toThrow(/line 2: expected 6 fields, got 5/);
  });

  it("rejects non-integer seeds", () => {
    const text = HEADER + "\na,b,c,zero,m,1\n";
    expect(() => parseResults(text)).toThrow(/seed is not an integer: zero/);
  });

  it("rejects non-numeric values", () => {
    const text = HEADER + "\na,b,c,0,m,lots\n";
    expect(() => parseResults(text)).toThrow(/value is not a number: lots/);
  });

  it("parses every fixture", () => {
    for (const [experiment, text] of Object.entries(FIXTURES)) {
      const rows = parseResults(text);
      expect(rows.length).toBeGreaterThan(0);
      expect(rows.every((r) => r.experiment === experiment)).toBe(true);
    }
  });
});
