import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { frameAt, previewSvg } from "../src/preview.js";
import { Trajectory } from "../src/types.js";

const trajectory = JSON.parse(
  readFileSync(new URL("./fixtures/trajectory.json", import.meta.url), "utf8"),
) as Trajectory;

const geometry = { width: 90, height: 200, margin: 12 };

describe("trajectory preview", () => {
  it("renders one circle per focus", () => {
    const svg = previewSvg(trajectory);
    expect([...svg.matchAll(/class="focus"/g)]).toHaveLength(trajectory.frames[0].foci.length);
    expect(svg).toContain(`data-frames="${trajectory.frames.length}"`);
  });

  it("keeps placements inside the viewport", () => {
    for (let k = 0; k < trajectory.frames.length; k += 7) {
      for (const placement of frameAt(trajectory, k, geometry)) {
        expect(placement.cx).toBeGreaterThanOrEqual(0);
        expect(placement.cx).toBeLessThanOrEqual(geometry.width);
        expect(placement.cy).toBeGreaterThanOrEqual(geometry.margin - 1e-9);
        expect(placement.cy).toBeLessThanOrEqual(geometry.height - geometry.margin + 1e-9);
        expect(placement.opacity).toBeGreaterThan(0);
        expect(placement.opacity).toBeLessThanOrEqual(1);
      }
    }
  });

  it("wraps the frame index", () => {
    const total = trajectory.frames.length;
    expect(frameAt(trajectory, total + 3, geometry)).toEqual(frameAt(trajectory, 3, geometry));
  });

  it("maps amplitude onto opacity", () => {
    const bright: Trajectory = {
      ...trajectory,
      frames: [{ t: 0, foci: [[0, 0, 1]] }],
    };
    const dim: Trajectory = {
      ...trajectory,
      frames: [{ t: 0, foci: [[0, 0, 0]] }],
    };
    expect(frameAt(bright, 0, geometry)[0].opacity).toBe(1);
    expect(frameAt(dim, 0, geometry)[0].opacity).toBeCloseTo(0.25, 12);
  });
});
