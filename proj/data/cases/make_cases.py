#!/usr/bin/env python3
"""Writes the bundled network files in this directory.

ieee33_gas20.json: 33-bus radial feeder (Baran-Wu topology and loads) coupled
to a 20-node tree gas network on buses 1..20. Line B/G are V^2 X/|Z|^2 and
V^2 R/|Z|^2 in kW per radian / per unit of voltage, with V = 12.66 kV. Gas constants are synthetic; the
pipe scale is chosen so the relaxed problem stays feasible while a share of
the generated cases never recover pressures within the outer-iteration limit.

toy2.json, toy3.json: desk-scale cases for tests.
"""
import json
import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))

LINES = [
    (1, 2, .0922, .0470), (2, 3, .4930, .2511), (3, 4, .3660, .1864), (4, 5, .3811, .1941),
    (5, 6, .8190, .7070), (6, 7, .1872, .6188), (7, 8, .7114, .2351), (8, 9, 1.030, .7400),
    (9, 10, 1.044, .7400), (10, 11, .1966, .0650), (11, 12, .3744, .1238), (12, 13, 1.468, 1.155),
    (13, 14, .5416, .7129), (14, 15, .5910, .5260), (15, 16, .7463, .5450), (16, 17, 1.289, 1.721),
    (17, 18, .7320, .5740), (2, 19, .1640, .1565), (19, 20, 1.5042, 1.3554), (20, 21, .4095, .4784),
    (21, 22, .7089, .9373), (3, 23, .4512, .3083), (23, 24, .8980, .7091), (24, 25, .8960, .7011),
    (6, 26, .2030, .1034), (26, 27, .2842, .1447), (27, 28, 1.059, .9337), (28, 29, .8042, .7006),
    (29, 30, .5075, .2585), (30, 31, .9744, .9630), (31, 32, .3105, .3619), (32, 33, .3410, .5302),
]

LOAD_KW = [0, 100, 90, 120, 60, 60, 200, 200, 60, 60, 45, 60, 60, 120, 60, 60, 60, 90, 90, 90, 90,
           90, 90, 420, 420, 60, 60, 60, 120, 200, 150, 210, 60]

# Hourly multipliers (hour 0 = midnight).
ELEC_SHAPE = [0.62, 0.58, 0.56, 0.55, 0.57, 0.63, 0.74, 0.86, 0.93, 0.96, 0.98, 1.00,
              0.99, 0.97, 0.95, 0.94, 0.96, 1.00, 1.00, 0.97, 0.91, 0.83, 0.74, 0.67]
# Heating-dominated gas load peaks in the early morning.
GAS_SHAPE = [0.92, 0.95, 0.97, 1.00, 1.00, 0.98, 0.96, 0.90, 0.82, 0.74, 0.68, 0.64,
             0.62, 0.62, 0.64, 0.68, 0.74, 0.82, 0.88, 0.90, 0.90, 0.88, 0.88, 0.90]
PRICE_SHAPE = [0.70, 0.66, 0.64, 0.64, 0.66, 0.72, 0.85, 1.00, 1.10, 1.12, 1.10, 1.08,
               1.05, 1.02, 1.00, 1.02, 1.10, 1.25, 1.30, 1.22, 1.10, 0.95, 0.82, 0.75]

GAS_PIPES = [(k, k + 1) for k in range(1, 18)] + [(2, 19), (19, 20)]
GAS_BASE = [0.6, 1.1, 0.9, 1.2, 0.8, 0.8, 1.5, 1.5, 0.8, 0.8, 0.7, 0.8, 0.8, 1.1, 0.8, 0.8, 0.8, 1.0, 1.0, 1.0]
PSI_MIN, PSI_MAX = 20.0, 100.0
C_F = 4.6
V2_KW = 12.66 ** 2 * 1000.0


def r6(v):
    return round(v, 6)


def storage(H, q):
    return {"e_cap": 400.0, "eta_st": 0.99, "eta_ch": 0.95, "eta_dh": 0.95, "x_min": 0.1, "x_max": 0.9,
            "x_init": 0.5, "p_ch_max": 80.0, "p_dh_max": 80.0,
            "Q_st": [[q if a == b else 0.0 for b in range(H)] for a in range(H)]}


def downstream_flow(pipes, demand, n, source=1):
    """Flow on each pipe (from -> to orientation) of a tree fed at `source`."""
    adj = {k: [] for k in range(1, n + 1)}
    for p, (a, b) in enumerate(pipes):
        adj[a].append((b, p))
        adj[b].append((a, p))
    flow = [0.0] * len(pipes)

    def visit(u, parent):
        total = demand[u - 1]
        for w, p in adj[u]:
            if w == parent:
                continue
            sub = visit(w, u)
            flow[p] = sub if pipes[p][0] == u else -sub
            total += sub
        return total

    visit(source, 0)
    return flow


def ieee33(H=24):
    buses = []
    for k in range(1, 34):
        buses.append({
            "id": k, "theta_min": 0.0 if k == 1 else -0.5, "theta_max": 0.0 if k == 1 else 0.5,
            "v_min": 0.95, "v_max": 1.05,
            "d_e": [r6(LOAD_KW[k - 1] * ELEC_SHAPE[h]) for h in range(H)],
            "has_transmission_tie": k == 1,
        })
    lines = []
    for a, b, R, X in LINES:
        z2 = R * R + X * X
        lines.append({"from": a, "to": b, "B": r6(V2_KW * X / z2), "G": r6(V2_KW * R / z2)})
    gas_nodes = []
    for k in range(1, 21):
        gas_nodes.append({"id": k, "psi_min": PSI_MIN, "psi_max": PSI_MAX,
                          "d_g": [r6(GAS_BASE[k - 1] * GAS_SHAPE[h]) for h in range(H)],
                          "is_source": k == 1})
    peak = [GAS_BASE[k] * 1.4 for k in range(20)]
    cap_flow = downstream_flow(GAS_PIPES, peak, 20)
    pipes = []
    for p, (a, b) in enumerate(GAS_PIPES):
        # room for the heaviest gas load plus every generator at full output
        pipes.append({"from": a, "to": b, "c_f": C_F, "phi_max": r6(math.ceil(1.6 * abs(cap_flow[p]) + 8.0))})
    gas_dg = {4: 150.0, 8: 150.0, 14: 150.0, 18: 150.0}
    ngu = {11: 120.0, 22: 120.0, 25: 120.0, 30: 120.0, 33: 120.0}
    st = {7, 12, 17, 24, 29, 32}
    prosumers = []
    for k in range(1, 34):
        pr = {"bus_id": k, "gas_node_id": k if k <= 20 else None, "dg_kind": "none",
              "p_dg_min": 0.0, "p_dg_max": 0.0, "q_ngu": 0.0, "l_ngu": 0.0, "eta_gu": 1.0,
              "storage": storage(H, 0.002) if k in st else None}
        if k in gas_dg:
            pr.update({"dg_kind": "gas_fueled", "p_dg_max": gas_dg[k], "eta_gu": 0.02})
        if k in ngu:
            pr.update({"dg_kind": "non_gas_fueled", "p_dg_max": ngu[k], "q_ngu": 0.0004, "l_ngu": 0.06})
        prosumers.append(pr)
    market = {
        "q_e": [r6(2.0e-5 * PRICE_SHAPE[h]) for h in range(H)],
        "l_e": [r6(0.08 * PRICE_SHAPE[h]) for h in range(H)],
        "q_g": [0.02] * H,
        "l_g": [2.0] * H,
        "sigma_e_min": 0.0, "sigma_e_max": 6000.0,
        "sigma_g_min": 0.0, "sigma_g_max": 200.0,
    }
    return {"format": "iegds-v1", "horizon": {"H": H, "T_s": 1.0}, "buses": buses, "lines": lines,
            "gas_nodes": gas_nodes, "pipes": pipes, "prosumers": prosumers, "market": market}


def toy(n_gas, H=1):
    """Path feeder of n_gas buses, each with a gas node; gas DG at the last bus."""
    buses, lines, nodes, pipes, prosumers = [], [], [], [], []
    for k in range(1, n_gas + 1):
        buses.append({"id": k, "theta_min": 0.0 if k == 1 else -0.5, "theta_max": 0.0 if k == 1 else 0.5,
                      "v_min": 0.95, "v_max": 1.05, "d_e": [0.0 if k == 1 else 40.0] * H,
                      "has_transmission_tie": k == 1})
        nodes.append({"id": k, "psi_min": 10.0, "psi_max": 30.0, "d_g": [0.0 if k == 1 else 1.0] * H,
                      "is_source": k == 1})
        pr = {"bus_id": k, "gas_node_id": k, "dg_kind": "none", "p_dg_min": 0.0, "p_dg_max": 0.0,
              "q_ngu": 0.0, "l_ngu": 0.0, "eta_gu": 1.0, "storage": None}
        if k == n_gas:
            pr.update({"dg_kind": "gas_fueled", "p_dg_max": 60.0, "eta_gu": 0.05})
        prosumers.append(pr)
        if k > 1:
            lines.append({"from": k - 1, "to": k, "B": 5000.0, "G": 2500.0})
            pipes.append({"from": k - 1, "to": k, "c_f": 1.0, "phi_max": 10.0})
    market = {"q_e": [1e-4] * H, "l_e": [0.1] * H, "q_g": [0.02] * H, "l_g": [1.0] * H,
              "sigma_e_min": 0.0, "sigma_e_max": 1000.0, "sigma_g_min": 0.0, "sigma_g_max": 50.0}
    return {"format": "iegds-v1", "horizon": {"H": H, "T_s": 1.0}, "buses": buses, "lines": lines,
            "gas_nodes": nodes, "pipes": pipes, "prosumers": prosumers, "market": market}


def dump(obj, name):
    with open(os.path.join(HERE, name), "w") as f:
        json.dump(obj, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    dump(ieee33(), "ieee33_gas20.json")
    dump(toy(2), "toy2.json")
    dump(toy(3), "toy3.json")
