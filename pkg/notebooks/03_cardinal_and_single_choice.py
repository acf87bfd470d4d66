# %% [markdown]
# # Cardinal voting and single choice
#
# A cardinal voter approves their top `z` candidates.  With `z = 1`
# (single choice) 20 voters can back at most 20 distinct candidates, and
# ties at zero votes go to dishonest candidates.

# %%
from committee_elections.simulator import ElectionConfig, estimate_success
from committee_elections.strategies import Strategy, cardinal_vote_probs, single_choice_vote_probs
from committee_elections.signal_model import SignalParams

for z in (1, 3, 5, 10, 21):
    cfg = ElectionConfig.uniform(30, 20, 21, 30, 0.75, 0.75, 0.5, 0.1, Strategy.cardinal(z), seed=3)
    est = estimate_success(cfg, 10_000)
    print(f"z={z:>2}: success {est.value:.4f}")

# %% [markdown]
# Per-voter approval probabilities for a candidate of each type.

# %%
params = SignalParams(0.75, 0.75, 0.5, 0.1)
print("single choice", single_choice_vote_probs(params, 30))
for z in (1, 5, 21):
    print(f"cardinal({z})", cardinal_vote_probs(z, params, 30))

# %% [markdown]
# A lone voter does best by approving exactly `k` candidates.

# %%
for strat in (Strategy.threshold(0.45), Strategy.cardinal(15), Strategy.cardinal(21), Strategy.cardinal(25)):
    cfg = ElectionConfig.uniform(30, 1, 21, 30, 0.75, 0.75, 0.5, 0.1, strat, seed=4)
    print(strat, round(estimate_success(cfg, 20_000).value, 4))
