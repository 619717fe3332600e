/** Animated 2-D preview of a stimulus trajectory, built from the frames
 * the service exports. Pure SVG-string generation plus a tick function;
 * the caller owns the timer. */

import { Trajectory } from "./types.js";

export interface PreviewGeometry {
  width: number;
  height: number;
  margin: number;
}

const DEFAULT_GEOMETRY: PreviewGeometry = { width: 90, height: 200, margin: 12 };

/** Static skeleton: stroke axis plus one circle per focus, positioned by tick(). */
export function previewSvg(
  trajectory: Trajectory,
  geometry: PreviewGeometry = DEFAULT_GEOMETRY,
): string {
  const { width, height, margin } = geometry;
  const fociCount = trajectory.frames[0]?.foci.length ?? 1;
  const circles = Array.from({ length: fociCount })
    .map((_, k) => `<circle class="focus" data-focus="${k}" r="6" cx="${width / 2}" cy="${height - margin}" />`)
    .join("");
  return (
    `<svg viewBox="0 0 ${width} ${height}" data-frames="${trajectory.frames.length}">` +
    `<line x1="${width / 2}" y1="${margin}" x2="${width / 2}" y2="${height - margin}" class="stroke-axis" />` +
    circles +
    `</svg>`
  );
}

export interface FocusPlacement {
  cx: number;
  cy: number;
  opacity: number;
}

/** Where each focus circle belongs at frame index k (wraps around). */
export function frameAt(
  trajectory: Trajectory,
  index: number,
  geometry: PreviewGeometry = DEFAULT_GEOMETRY,
): FocusPlacement[] {
  const { width, height, margin } = geometry;
  const frames = trajectory.frames;
  const frame = frames[((index % frames.length) + frames.length) % frames.length];
  const usable = height - 2 * margin;
  // x spans +/- 10 mm around the stroke axis, y runs elbow (bottom) to wrist (top)
  return frame.foci.map(([x, y, amplitude]) => ({
    cx: width / 2 + (x / 10) * (width / 2 - margin),
    cy: height - margin - (y / trajectory.path_length) * usable,
    opacity: 0.25 + 0.75 * amplitude,
  }));
}

export function animatePreview(
  element: { querySelectorAll(sel: string): ArrayLike<Element> },
  trajectory: Trajectory,
  geometry: PreviewGeometry = DEFAULT_GEOMETRY,
): (frameIndex: number) => void {
  const circles = Array.from(element.querySelectorAll("circle.focus"));
  return (frameIndex: number) => {
    const placements = frameAt(trajectory, frameIndex, geometry);
    placements.forEach((p, k) => {
      const circle = circles[k];
      if (!circle) return;
      circle.setAttribute("cx", p.cx.toFixed(2));
      circle.setAttribute("cy", p.cy.toFixed(2));
      circle.setAttribute("opacity", p.opacity.toFixed(3));
    });
  };
}
