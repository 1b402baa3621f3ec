"""Regenerate tests/data/oracles.json from independent high-precision derivations.

Nothing here imports the package. Rigid outcomes and hand substitutions use
exact rationals; Kelvin-Voigt bounces use the fact that every contact phase
is an affine ODE, so each phase is advanced with an mpmath matrix
exponential and phase changes are located with mpmath root finding.

    python scripts/derive_oracles.py
"""

from __future__ import annotations

import json
from fractions import Fraction as Q
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40
OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"


# --- rigid map in exact arithmetic ---------------------------------------------------


def rigid_exact(x_dot, y_dot, omega, mu, r):
    x_dot, y_dot, omega, mu, r = map(Q, (x_dot, y_dot, omega, mu, r))
    h0 = x_dot + omega
    n_total = (1 + r) * -y_dot
    if h0 == 0:
        return "III", [float(x_dot), float(-r * y_dot), float(omega)]
    s = 1 if h0 > 0 else -1
    rate = Q(7, 2) * mu  # |dv_T/dn| while slipping
    n_stick = abs(h0) / rate
    if n_stick >= n_total:
        family, dn = "I", n_total
    else:
        family = "III" if y_dot + n_stick <= 0 else "II"
        dn = n_stick
    # linear momentum and angular momentum about the contact point
    x_f = x_dot - s * mu * dn
    w_f = omega - Q(5, 2) * s * mu * dn
    label = family + ("+" if s > 0 else "-")
    return label, [float(x_f), float(-r * y_dot), float(w_f)]


RIGID_CASES = [
    (10, -2, 0, Q(3, 10), Q(1, 2)),
    (Q(5, 2), -2, 0, Q(3, 10), Q(1, 2)),
    (1, -2, 0, Q(3, 10), Q(1, 2)),
    (-10, -2, 0, Q(3, 10), Q(1, 2)),
    (-Q(5, 2), -2, 0, Q(3, 10), Q(1, 2)),
    (-1, -2, 0, Q(3, 10), Q(1, 2)),
    (2, -1, -2, Q(3, 10), Q(1, 2)),
    (3, -Q(1, 2), 4, Q(4, 5), Q(9, 10)),
    (0, -5, 12, Q(1, 20), 1),
]


# --- Kelvin-Voigt phases as affine systems --------------------------------------------


def kv_matrices(d1, d2, eta, mu, grav):
    """Augmented matrices ``M`` with ``q' = M q`` for ``q = [X, X', Y, Y', W, 1]``."""
    d1, d2, eta, mu, grav = map(mp.mpf, (d1, d2, eta, mu, grav))
    lam_n = [0, 0, -1, -2 * d2, 0, -grav]  # Lambda_N as a row acting on q
    tan = [-eta**2, -2 * d1 * eta, 0, 0, 0, 0]  # tangential spring-dashpot load A

    def slip(sign):
        lam_t = [-sign * mu * v for v in lam_n]
        rows = [
            [0, 1, 0, 0, 0, 0],
            [a + b for a, b in zip(tan, lam_t)],
            [0, 0, 0, 1, 0, 0],
            lam_n,
            [mp.mpf(5) / 2 * v for v in lam_t],
            [0] * 6,
        ]
        return mp.matrix(rows)

    # rolling: omega = -X', X'' = (5/7) A, omega' = -(5/7) A
    roll = mp.matrix([
        [0, 1, 0, 0, 0, 0],
        [mp.mpf(5) / 7 * v for v in tan],
        [0, 0, 0, 1, 0, 0],
        lam_n,
        [-mp.mpf(5) / 7 * v for v in tan],
        [0] * 6,
    ])
    return {"slip+": slip(1), "slip-": slip(-1), "roll": roll}, lam_n, tan


class KVPhases:
    def __init__(self, d1, d2, eta, mu, grav):
        self.mats, self.lam_n, self.tan = kv_matrices(d1, d2, eta, mu, grav)
        self.mu = mp.mpf(mu)

    def state(self, phase, q0, t):
        return mp.expm(self.mats[phase] * t) * q0

    @staticmethod
    def dot(row, q):
        return mp.fsum(mp.mpf(a) * q[i] for i, a in enumerate(row))

    def lam(self, q):
        return self.dot(self.lam_n, q)

    def load(self, q):
        return self.dot(self.tan, q)

    def events(self, phase, q):
        lam = self.lam(q)
        out = {"lift": lam}
        if phase == "slip+":
            out["slip"] = q[1] + q[4]
        elif phase == "slip-":
            out["slip"] = -(q[1] + q[4])
        else:
            a = self.load(q)
            out["exit1"] = -(a - mp.mpf(7) / 2 * self.mu * lam)
            out["exit2"] = a + mp.mpf(7) / 2 * self.mu * lam
        return out


def _event_fn(sim, phase, q, key):
    def fn(s):
        return sim.events(phase, sim.state(phase, q, s))[key]

    return fn


def kv_bounce(params, state0, dt=mp.mpf("0.005"), horizon=20):
    sim = KVPhases(*params)
    q = mp.matrix([mp.mpf(v) for v in state0] + [1])
    h = q[1] + q[4]
    if h > 0:
        phase = "slip+"
    elif h < 0:
        phase = "slip-"
    else:
        lam, a = sim.lam(q), sim.load(q)
        phase = "roll" if abs(a) < mp.mpf(7) / 2 * sim.mu * lam else ("slip+" if a > 0 else "slip-")
    history = [phase]
    t_total = mp.mpf(0)
    while True:
        t = mp.mpf(0)
        start = sim.events(phase, q)
        armed = {k: v > 0 for k, v in start.items()}
        found = None
        while t < horizon:
            t_next = t + dt
            vals = sim.events(phase, sim.state(phase, q, t_next))
            hits = []
            for key, v in vals.items():
                if not armed[key]:
                    armed[key] = v > 0
                    continue
                if v <= 0:
                    root = mp.findroot(_event_fn(sim, phase, q, key), (t, t_next), solver="anderson")
                    hits.append((root, key))
            if hits:
                found = min(hits)
                break
            t = t_next
        if found is None:
            raise RuntimeError("no event")
        t_ev, key = found
        q = sim.state(phase, q, t_ev)
        t_total += t_ev
        if key == "lift":
            return history, t_total, [q[i] for i in range(5)]
        if key == "slip":
            h = q[1] + q[4]
            q[1] -= h * 2 / 7
            q[4] = -q[1]
            lam, a = sim.lam(q), sim.load(q)
            g1 = a - mp.mpf(7) / 2 * sim.mu * lam
            g2 = a + mp.mpf(7) / 2 * sim.mu * lam
            phase = "roll" if g1 < 0 < g2 else ("slip-" if g2 <= 0 else "slip+")
        else:
            phase = "slip+" if key == "exit1" else "slip-"
        history.append(phase)


KV_BOUNCES = [
    # d1, d2, eta, mu, gravity load; touchdown state
    ((0.2, 0.2, 0.1, 0.3, 0.0), (0, 0.3, 0, -1, 1.0)),
    ((0.2, 0.2, 0.1, 0.3, 0.0), (0, 1.0, 0, -1, 0.5)),
    ((0.2, 0.2, 0.1, 0.3, 0.0), (0, 0.3, 0, -1, -0.3)),
    ((0.2, 0.2, 0.1, 0.4, 4.56e-4), (0, 1.2, 0, -0.6, 1.0)),
    ((0.3, 0.1, 0.05, 0.5, 0.0), (0, 2.0, 0, -1.0, 0.0)),
]


def vertical_restitution(d2, grav=0):
    """``Y'_F / -Y'_0`` and lift-off point of ``Y'' = -2 d2 Y' - Y - grav`` from ``(0, -1)``."""
    hist, t, q = kv_bounce((0, d2, 1, 0, grav), (0, 0, 0, -1, 0))
    return q[3], t, q[2]


def hand_substitution():
    d1 = d2 = Q(1, 5)
    eta = Q(1, 10)
    mu = Q(3, 10)
    out = {}
    # p = [0, 1, -0.1, -0.5, 0]
    X, Xd, Y, Yd, W = Q(0), Q(1), Q(-1, 10), Q(-1, 2), Q(0)
    lam = -2 * d2 * Yd - Y
    a = -2 * d1 * eta * Xd - eta**2 * X
    lt1, lt2 = -mu * lam, mu * lam
    out["F1"] = [float(v) for v in (Xd, a + lt1, Yd, lam, Q(5, 2) * lt1)]
    out["F2"] = [float(v) for v in (Xd, a + lt2, Yd, lam, Q(5, 2) * lt2)]
    out["lambda_n"] = float(lam)
    # p = [0, 1, -0.1, -0.5, -1]
    g1 = a - Q(7, 2) * mu * lam
    g2 = a + Q(7, 2) * mu * lam
    out["g1"], out["g2"] = float(g1), float(g2)
    out["alpha"] = float(g1 / (g1 - g2))
    out["alpha_exact"] = [(g1 / (g1 - g2)).numerator, (g1 / (g1 - g2)).denominator]
    out["touchdown_lambda_n"] = float(-2 * d2 * Q(-1))
    return out


def main():
    doc = {"rigid": [], "kv_bounces": [], "vertical": {}, "hand": hand_substitution()}
    for case in RIGID_CASES:
        label, final = rigid_exact(*case)
        doc["rigid"].append({"state": [float(v) for v in case[:3]], "mu": float(case[3]), "r": float(case[4]),
                             "label": label, "final": final})
    for params, state in KV_BOUNCES:
        hist, t, q = kv_bounce(params, state)
        doc["kv_bounces"].append({
            "params": dict(zip(("d1", "d2", "eta", "mu", "gravity_load"), params)),
            "state": list(state),
            "phases": hist,
            "tau_lift": float(t),
            "final": [float(v) for v in q],
        })
    for d2 in ("0.05", "0.1", "0.15", "0.2", "0.3"):
        v, t, y = vertical_restitution(mp.mpf(d2))
        doc["vertical"][d2] = {"restitution": float(v), "tau_lift": float(t), "y_lift": float(y)}
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
