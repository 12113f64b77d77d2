/** Minimal canvas line chart for the per-stage loss traces. */

export function drawLossChart(
  canvas: HTMLCanvasElement,
  stage1: number[],
  stage2: number[],
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, width, height);
  const all = stage1.concat(stage2).filter((v) => Number.isFinite(v));
  if (all.length < 2) return;
  const max = Math.max(...all);
  const min = Math.min(...all);
  const span = Math.max(max - min, 1e-12);
  const total = stage1.length + stage2.length;

  const trace = (values: number[], offset: number, color: string) => {
    if (values.length === 0) return;
    ctx.strokeStyle = color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    values.forEach((v, i) => {
      const x = ((offset + i) / Math.max(total - 1, 1)) * (width - 8) + 4;
      const y = height - 6 - ((v - min) / span) * (height - 12);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  };
  trace(stage1, 0, "#5ac8fa");
  trace(stage2, stage1.length, "#ff9f0a");
}
