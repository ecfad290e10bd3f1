"""Regenerates the checked-in fixtures. Requires numpy and scikit-image."""

from pathlib import Path

import numpy as np
from skimage import data, transform

HERE = Path(__file__).parent


def write_csv(name, pts):
    with open(HERE / name, "w") as fh:
        for row in pts:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def write_ppm(name, img):
    h, w, _ = img.shape
    with open(HERE / name, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(img.astype(np.uint8).tobytes())


def two_moons(n, rng, noise=0.05):
    a = n // 2
    t1 = np.pi * rng.random(a)
    t2 = np.pi * rng.random(n - a)
    upper = np.c_[np.cos(t1), np.sin(t1)]
    lower = np.c_[1.0 - np.cos(t2), 0.5 - np.sin(t2)]
    pts = np.r_[upper, lower] + noise * rng.standard_normal((n, 2))
    return pts - [0.5, 0.25]


def photo(img, size=32):
    small = transform.resize(img, (size, size), anti_aliasing=True)
    return np.clip(np.rint(small * 255), 0, 255)


def main():
    rng = np.random.default_rng(20240601)
    write_csv("flow_source.csv", [-2.0, -2.0] + 0.2 * rng.standard_normal((100, 2)))
    write_csv("flow_target.csv", two_moons(100, rng))
    write_csv("density_mu.csv", rng.standard_normal((200, 2)) * [0.8, 0.3])
    write_csv("density_nu.csv", rng.standard_normal((200, 2)) * [0.3, 0.8] + [0.8, 0.3])
    write_csv("cube_3d.csv", rng.random((50, 3)))

    write_ppm("red_32.ppm", np.tile([255, 0, 0], (32, 32, 1)))
    write_ppm("blue_32.ppm", np.tile([0, 0, 255], (32, 32, 1)))
    write_ppm("astronaut_32.ppm", photo(data.astronaut()))
    write_ppm("coffee_32.ppm", photo(data.coffee()))
    write_ppm("chelsea_24x32.ppm", photo(data.chelsea())[:24])


if __name__ == "__main__":
    main()
