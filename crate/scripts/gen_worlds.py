"""Regenerate the bundled world files under crates/core/worlds/."""

from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "worlds"


class Canvas:
    def __init__(self, width_m, height_m, res):
        self.res = res
        self.w = round(width_m / res)
        self.h = round(height_m / res)
        self.rows = [["."] * self.w for _ in range(self.h)]

    def fill(self, x0, y0, x1, y1, ch):
        c0, c1 = round(x0 / self.res), round(x1 / self.res)
        r0, r1 = round(y0 / self.res), round(y1 / self.res)
        for r in range(max(r0, 0), min(r1, self.h)):
            for c in range(max(c0, 0), min(c1, self.w)):
                self.rows[r][c] = ch

    def clear(self, x0, y0, x1, y1):
        self.fill(x0, y0, x1, y1, ".")

    def border(self, t, textures):
        """Outer wall, each side split into segments of cycling texture."""
        w_m, h_m = self.w * self.res, self.h * self.res
        seg = 2.5
        k = 0
        x = 0.0
        while x < w_m:
            self.fill(x, 0, x + seg, t, textures[k % len(textures)])
            self.fill(x, h_m - t, x + seg, h_m, textures[(k + 3) % len(textures)])
            x += seg
            k += 1
        y = 0.0
        while y < h_m:
            self.fill(0, y, t, y + seg, textures[(k + 1) % len(textures)])
            self.fill(w_m - t, y, w_m, y + seg, textures[(k + 5) % len(textures)])
            y += seg
            k += 1

    def text(self):
        head = f"world {self.w} {self.h} {self.res:g}\n"
        return head + "".join("".join(r) + "\n" for r in self.rows)


def museum():
    c = Canvas(25.0, 20.0, 0.05)
    t = 0.15
    c.border(t, "1357924680")
    # gallery partitions with doorways
    c.fill(9.0, 0, 9.0 + t, 7.5, "2")
    c.fill(9.0, 9.0, 9.0 + t, 14.0, "6")
    c.fill(16.5, 5.0, 16.5 + t, 20.0, "8")
    c.clear(16.5, 11.0, 16.5 + t, 12.6)
    c.fill(0, 14.0, 6.0, 14.0 + t, "4")
    c.fill(9.0, 14.0, 13.0, 14.0 + t, "4")
    c.fill(16.5, 8.0, 22.0, 8.0 + t, "0")
    c.fill(11.0, 5.0, 16.5, 5.0 + t, "9")
    # pillars
    for (x, y, ch) in [(3.0, 4.0, "7"), (5.5, 9.5, "3"), (12.0, 9.5, "1"),
                       (13.5, 2.0, "5"), (20.0, 3.0, "#"), (21.0, 12.0, "2"),
                       (19.0, 16.5, "6"), (3.5, 17.0, "9")]:
        c.fill(x, y, x + 0.4, y + 0.4, ch)
    # display cases
    c.fill(2.0, 7.0, 4.5, 7.8, "8")
    c.fill(11.5, 16.0, 14.5, 16.6, "0")
    c.fill(18.5, 10.0, 19.3, 13.5, "5")
    c.fill(6.0, 1.5, 7.2, 2.3, "3")
    c.fill(22.5, 16.0, 23.8, 18.5, "7")
    c.fill(12.5, 11.5, 14.0, 12.2, "#")
    return c


def office():
    c = Canvas(40.0, 30.0, 0.1)
    t = 0.2
    c.border(t, "2468013579")
    # 3x3 rooms separated by 2 m corridors
    xs = [(0.0, 12.0), (14.0, 26.0), (28.0, 40.0)]
    ys = [(0.0, 8.8), (10.8, 19.2), (21.2, 30.0)]
    digits = "123456789"
    k = 0
    for j, (y0, y1) in enumerate(ys):
        for i, (x0, x1) in enumerate(xs):
            ch = digits[k]
            k += 1
            # walls facing the corridors
            if i > 0:
                c.fill(x0, y0, x0 + t, y1, ch)
            if i < 2:
                c.fill(x1 - t, y0, x1, y1, ch)
            if j > 0:
                c.fill(x0, y0, x1, y0 + t, ch)
            if j < 2:
                c.fill(x0, y1 - t, x1, y1, ch)
            # doors: alternate sides so rooms differ
            cx = (x0 + x1) / 2 + (i - 1) * 2.0
            cy = (y0 + y1) / 2 + (j - 1) * 1.5
            if j < 2:
                c.clear(cx - 0.6, y1 - t, cx + 0.6, y1)
            else:
                c.clear(cx - 0.6, y0, cx + 0.6, y0 + t)
            if i == 0:
                c.clear(x1 - t, cy - 0.6, x1, cy + 0.6)
            elif i == 2:
                c.clear(x0, cy - 0.6, x0 + t, cy + 0.6)
            # furniture, placed differently per room
            fx = x0 + 1.5 + (k * 1.7) % 6.0
            fy = y0 + 1.5 + (k * 1.3) % 4.0
            c.fill(fx, fy, fx + 1.6, fy + 0.8, digits[(k + 4) % 9])
            gx = x0 + 2.0 + (k * 2.9) % 7.0
            gy = y0 + 1.2 + (k * 2.3) % 5.0
            c.fill(gx, gy, gx + 0.5, gy + 0.5, "0")
    return c


def loop_corridor():
    # ring corridor around a solid block, with a short dog-leg passage
    # through the block
    c = Canvas(24.0, 16.0, 0.1)
    t = 0.2
    c.border(t, "1592648370")
    c.fill(3.0, 3.0, 21.0, 13.0, "#")
    for (x0, x1, ch) in [(3.0, 7.0, "2"), (7.0, 11.0, "4"), (11.0, 15.0, "6"), (15.0, 21.0, "8")]:
        c.fill(x0, 3.0, x1, 3.2, ch)
        c.fill(x0, 12.8, x1, 13.0, str(9 - int(ch)))
    c.clear(10.5, 3.0, 12.0, 8.6)
    c.clear(10.5, 7.4, 14.0, 8.6)
    c.clear(12.8, 7.4, 14.0, 13.0)
    return c


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, build in [("museum", museum), ("office", office), ("loop_corridor", loop_corridor)]:
        (OUT / f"{name}.world").write_text(build().text())


if __name__ == "__main__":
    main()
