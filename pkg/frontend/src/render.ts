/** Canvas drawing: a simple cartoon head whose mouth is the blended rig path. */

const FACE = "#f2c9a0";
const OUTLINE = "#3a2d23";
const MOUTH = "#7c2b2b";

export function drawAvatar(
  ctx: CanvasRenderingContext2D,
  mouthPath: Float64Array,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  const cx = width / 2;
  const cy = height / 2;
  const headR = Math.min(width, height) * 0.38;

  ctx.lineWidth = 3;
  ctx.strokeStyle = OUTLINE;
  ctx.fillStyle = FACE;
  ctx.beginPath();
  ctx.arc(cx, cy, headR, 0, 2 * Math.PI);
  ctx.fill();
  ctx.stroke();

  ctx.fillStyle = OUTLINE;
  for (const side of [-1, 1]) {
    ctx.beginPath();
    ctx.arc(cx + side * headR * 0.38, cy - headR * 0.25, headR * 0.07, 0, 2 * Math.PI);
    ctx.fill();
  }

  const mouthX = cx;
  const mouthY = cy + headR * 0.45;
  ctx.fillStyle = MOUTH;
  ctx.beginPath();
  for (let k = 0; k < mouthPath.length; k += 2) {
    const x = mouthX + mouthPath[k];
    const y = mouthY + mouthPath[k + 1];
    if (k === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  }
  ctx.closePath();
  ctx.fill();
  ctx.stroke();
}
