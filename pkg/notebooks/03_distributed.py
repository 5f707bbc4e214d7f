# %% [markdown]
# # Distributed observers
#
# Each leader sees only its own state and its integrator. It runs a copy
# of the full-state estimate and averages with its neighbours on the
# leader path `3-2-1-4-7-8-9` with gain `chi`. `chi` has to exceed a
# bound built from the filter and Lyapunov solutions.

# %%
import numpy as np

from lqpattern.centralized import synthesize_centralized
from lqpattern.graphs import grid_graph, path_graph
from lqpattern.observer import (
    build_error_system,
    build_measurements,
    design_observer,
    in_basin_u2,
    predict_limit_distributed,
)
from lqpattern.patterns import PatternSpec, build_pattern_matrix, is_in_pattern
from lqpattern.plant import PlantModel, build_augmented, solve_equilibrium
from lqpattern.sim import SimOptions, slowest_decay_rate, simulate_distributed

g = grid_graph(3, 3)
spec = PatternSpec([1, 1, 1, -1, -1, -1, 1, 1, 1])
plant = PlantModel(g, 4.0, (3, 2, 1, 4, 7, 8, 9))
sys = build_augmented(plant, build_pattern_matrix(g, spec))
cd = synthesize_centralized(sys, solve_equilibrium(plant, spec))
od = design_observer(sys, cd, build_measurements(plant), path_graph(7))
es = build_error_system(od, cd)
print(f"lambda2 = {od.lambda2:.4f}, bound = {od.chi_bound:.4g}, chi = {od.chi:.4g}")

# %% [markdown]
# The coupling gain is large, so the joint system is stiff. Its slow
# observer mode sets the simulation horizon.

# %%
print("||Mhat|| =", np.linalg.norm(es.Mhat, 2))
print("slowest observer-error mode:", slowest_decay_rate(es.What))

# %%
rng = np.random.default_rng(0)
xbar0 = np.array([3.9, 2.0, 0.6, -3.2, -2.9, -4.2, 4.1, 2.1, 0.6,
                  -1.9, -3.3, 1.2, 4.9, -3.3, -2.4, -1.0])
e0 = (rng.uniform(-5, 5, (7, 16)) - xbar0).ravel()
print(in_basin_u2(es, cd, xbar0, e0, spec))
rec = simulate_distributed(es, cd, xbar0, e0, SimOptions(t_end=150.0))
pred = predict_limit_distributed(es, cd, xbar0, e0)
print("final error norms / ||e0||:", rec.error_norms[-1] / np.linalg.norm(e0))
print("limit:", np.round(rec.limit_estimate[:9], 4))
print("rel. error vs prediction:", np.linalg.norm(rec.limit_estimate - pred) / np.linalg.norm(pred))
print("pattern formed:", is_in_pattern(rec.limit_estimate[:9], g, spec))
