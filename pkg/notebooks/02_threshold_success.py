# %% [markdown]
# # Exact success of threshold voting
#
# Thirty candidates, 21 seats, tolerance 1/3.  The committee is honest when
# at least 14 seats go to honest candidates, with every tie broken against
# them.  The closed form is checked against simulation, then swept over the
# threshold for a few electorate sizes.

# %%
from committee_elections.harness.experiments import bound_success, exact_success
from committee_elections.simulator import ElectionConfig, estimate_success
from committee_elections.strategies import Strategy

cfg = ElectionConfig.uniform(30, 3, 21, 30, 0.75, 0.75, 0.5, 0.2, Strategy.threshold(0.6), seed=1)
print("exact     ", exact_success(cfg).value)
est = estimate_success(cfg, 20_000)
print("simulated ", est.value, (round(est.ci_low, 4), round(est.ci_high, 4)))

# %% [markdown]
# With few voters the curve over `z` has several local peaks.

# %%
for n in (1, 2, 3, 4):
    curve = []
    for i in range(1, 100):
        c = ElectionConfig.uniform(30, n, 21, 30, 0.75, 0.75, 0.5, 0.2, Strategy.threshold(i / 100))
        curve.append(exact_success(c).value)
    best = max(range(len(curve)), key=curve.__getitem__)
    print(f"n={n}: best z={(best + 1) / 100:.2f}, success {curve[best]:.4f}")

# %% [markdown]
# Success approaches its ceiling quickly as voters are added.  The ceiling is
# the chance that at least 14 of the 30 candidates are honest at all.

# %%
for n in (10, 25, 50, 100, 150):
    c = ElectionConfig.uniform(30, n, 21, 30, 0.75, 0.75, 0.5, 0.1, Strategy.threshold(0.75))
    print(n, exact_success(c).value, exact_success(c, conditional=True).value, bound_success(c).value)
