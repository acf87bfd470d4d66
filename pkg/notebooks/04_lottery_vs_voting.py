# %% [markdown]
# # Lottery versus voting
#
# A stake lottery seats each member honest with probability `p`, so its
# failure is a binomial tail.  Voting can use even very weak signals from
# many voters.

# %%
from committee_elections.analytics import (
    ToleranceSpec,
    lifetime_fork_bound,
    lottery_failure,
    lottery_failure_hoeffding,
    lottery_success,
    min_committee_size,
)

tol = ToleranceSpec("1/3")
print("exact failure, k=1500, p=0.8:", lottery_failure(1500, 0.8, tol))
print("Chernoff lower bound on success:", lottery_success(1500, 0.8, tol, "chernoff"))
print("Hoeffding failure bound:", lottery_failure_hoeffding(1500, 0.8, tol))
print("lifetime bound over 2e8 elections at 1e-12:", lifetime_fork_bound(1e-12, 2 * 10**8))

# %% [markdown]
# Smallest committee per target failure.  The voting side uses 10^4 voters
# whose signals differ by 0.001 between types, with fewer trials than the
# full experiment so the script runs in seconds.

# %%
from committee_elections.simulator import ElectionConfig
from committee_elections.strategies import Strategy

cfg = ElectionConfig.uniform(10_000, 10_000, 1, 10_000, 0.8, 0.501, 0.5, 0.1, Strategy.threshold(0.8), seed=1)
for target in (1e-2, 1e-3):
    lot = min_committee_size(target, "lottery", (0.8, tol))
    vote = min_committee_size(target, "voting", cfg, trials=10_000)
    print(f"target {target:g}: lottery k={lot}, voting k={vote}")
