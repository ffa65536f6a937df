import { describe, expect, it } from "vitest";

import {
  containsTargetWord,
  generationBody,
  neighborBody,
  normalizeSubstitute,
  selectionBody,
  validateGeneration,
  validateNeighbor,
  validateSelection,
} from "../src/validate";

describe("normalizeSubstitute", () => {
  it("trims, lowercases, collapses whitespace", () => {
    expect(normalizeSubstitute("  Close  To ")).toBe("close to");
    expect(normalizeSubstitute("NEAR")).toBe("near");
    expect(normalizeSubstitute("   ")).toBe("");
  });
});

describe("containsTargetWord", () => {
  it("matches whole words only", () => {
    expect(containsTargetWord("by the side of", "by")).toBe(true);
    expect(containsTargetWord("inside", "in")).toBe(false);
    expect(containsTargetWord("nearby", "by")).toBe(false);
  });

  it("matches multiword lemmas as contiguous runs", () => {
    expect(containsTargetWord("right close to it", "close to")).toBe(true);
    expect(containsTargetWord("close by to it", "close to")).toBe(false);
  });
});

describe("validateGeneration", () => {
  it("rejects empty and containing substitutes", () => {
    expect(validateGeneration("   ", "by")).toMatch(/write a substitute/i);
    expect(validateGeneration("by the side of", "by")).toMatch(/must not contain/);
    expect(validateGeneration("Near", "by")).toBeNull();
  });

  it("builds a normalized body", () => {
    expect(generationBody("  Close  To ")).toEqual({ substitute: "close to" });
  });
});

describe("validateSelection", () => {
  const options = ["near", "beside", "next to"];

  it("enforces [Omit] exclusivity", () => {
    expect(
      validateSelection({ chosen: ["near"], writeIn: "", omit: true }, options),
    ).toMatch(/\[Omit\]/);
    expect(
      validateSelection({ chosen: [], writeIn: "toward", omit: true }, options),
    ).toMatch(/\[Omit\]/);
    expect(validateSelection({ chosen: [], writeIn: "", omit: true }, options)).toBeNull();
  });

  it("requires a nonempty response", () => {
    expect(validateSelection({ chosen: [], writeIn: "", omit: false }, options)).toMatch(
      /at least one/i,
    );
  });

  it("rejects write-ins that duplicate options", () => {
    expect(
      validateSelection({ chosen: [], writeIn: " NEAR ", omit: false }, options),
    ).toMatch(/already in the list/);
    expect(
      validateSelection({ chosen: [], writeIn: "toward", omit: false }, options),
    ).toBeNull();
  });

  it("rejects unknown chosen options", () => {
    expect(
      validateSelection({ chosen: ["bogus"], writeIn: "", omit: false }, options),
    ).toMatch(/Unknown option/);
  });

  it("builds a canonical body", () => {
    expect(
      selectionBody({ chosen: ["beside", "near"], writeIn: "", omit: false }),
    ).toEqual({ chosen: ["beside", "near"], write_in: null, omit: false });
    expect(selectionBody({ chosen: [], writeIn: " Toward ", omit: false })).toEqual({
      chosen: [],
      write_in: "toward",
      omit: false,
    });
  });
});

describe("validateNeighbor", () => {
  it("enforces None exclusivity and nonemptiness", () => {
    expect(validateNeighbor({ chosen: ["a"], none: true })).toMatch(/None/);
    expect(validateNeighbor({ chosen: [], none: false })).toMatch(/at least one/i);
    expect(validateNeighbor({ chosen: [], none: true })).toBeNull();
    expect(validateNeighbor({ chosen: ["a", "b"], none: false })).toBeNull();
  });

  it("builds a canonical body", () => {
    expect(neighborBody({ chosen: ["b", "a"], none: false })).toEqual({
      chosen: ["a", "b"],
      none: false,
    });
    expect(neighborBody({ chosen: [], none: true })).toEqual({ chosen: [], none: true });
  });
});
