/** Client-side rendering of server draw commands onto a canvas.
 *
 * The server owns geometry and the green/red/purple decisions; this module
 * only rasterises, so the annotated preview needs no video encoding.
 */

import type { BoxGeometry, DotGeometry, DrawCommand } from './types.js';

/** Mirror of the engine's default palette. */
export const COLORS: Record<string, string> = {
  green: 'rgb(0,200,0)',
  red: 'rgb(220,0,0)',
  purple: 'rgb(160,32,240)',
};

/** The sliver of CanvasRenderingContext2D the renderer touches. */
export interface DrawContext {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

export function renderCommands(
  ctx: DrawContext,
  commands: DrawCommand[],
  colors: Record<string, string> = COLORS,
): void {
  for (const cmd of commands) {
    const color = colors[cmd.color] ?? cmd.color;
    if (cmd.kind === 'box') {
      const g = cmd.geometry as BoxGeometry;
      ctx.strokeStyle = color;
      ctx.lineWidth = 2;
      ctx.strokeRect(g.x_min, g.y_min, g.x_max - g.x_min, g.y_max - g.y_min);
      if (cmd.caption) {
        ctx.fillStyle = color;
        ctx.font = '11px sans-serif';
        ctx.fillText(cmd.caption, g.x_min, Math.max(10, g.y_min - 3));
      }
    } else if (cmd.kind === 'dot') {
      const g = cmd.geometry as DotGeometry;
      ctx.fillStyle = color;
      ctx.beginPath();
      ctx.arc(g.cx, g.cy, g.radius, 0, Math.PI * 2);
      ctx.fill();
    } else if (cmd.kind === 'text' && cmd.caption) {
      const g = cmd.geometry as DotGeometry;
      ctx.fillStyle = color;
      ctx.font = '11px sans-serif';
      ctx.fillText(cmd.caption, g.cx, g.cy);
    }
  }
}
