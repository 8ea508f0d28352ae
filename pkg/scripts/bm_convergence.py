"""Reproducing error of the sphere quadrature against the node count."""
import numpy as np

from bumpkit import kernel as K


def test_fn(zeta):
    return 1 + zeta[:, 0] + 2 * zeta[:, 1] ** 2 - zeta[:, 0] * zeta[:, 2]


def main():
    z0 = np.zeros(3)
    z1 = np.array([0.3, 0.1j, 0])
    print(f"{'nodes':>8s} {'err at 0':>12s} {'err at z1':>12s}")
    for level in range(0, 14):
        p = K.sphere_patch(level)
        e0 = abs(K.bm_reproduce(test_fn, z0, p) - 1)
        e1 = abs(K.bm_reproduce(test_fn, z1, p) - test_fn(z1[None, :])[0])
        print(f"{len(p.weights):8d} {e0:12.3e} {e1:12.3e}")


if __name__ == "__main__":
    main()
