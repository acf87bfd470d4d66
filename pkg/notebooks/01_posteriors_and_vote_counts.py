# %% [markdown]
# # Posteriors and vote counts
#
# A voter sees a noisy signal about each candidate and converts it to a
# probability that the candidate is honest.  Threshold voters then approve
# every candidate above `z`, so each candidate's vote count is a Poisson
# binomial.

# %%
import numpy as np

from committee_elections.distributions import pbd_pmf
from committee_elections.signal_model import HONEST, MALICIOUS, SignalParams, posterior, posterior_conditional_distribution
from committee_elections.strategies import threshold_vote_probs

params = SignalParams(prior_honest=0.75, base_honest=0.75, base_malicious=0.5, noise_sd=0.1)
for s in (0.4, 0.55, 0.625, 0.7, 0.85):
    print(f"signal {s:.3f} -> posterior {posterior(s, params):.4f}")

# %% [markdown]
# The posterior law differs by candidate type; honest candidates tend to
# look better.

# %%
for ptype, name in ((HONEST, "honest"), (MALICIOUS, "malicious")):
    law = posterior_conditional_distribution(ptype, params)
    print(name, [round(law.cdf(x), 4) for x in (0.25, 0.5, 0.75, 0.9)])

# %% [markdown]
# Vote-count laws for 10 threshold voters at z = 0.75, each with its own
# noise level.

# %%
sigmas = np.linspace(0.05, 0.3, 10)
probs = [threshold_vote_probs(0.75, SignalParams(0.75, 0.75, 0.5, s)) for s in sigmas]
honest = pbd_pmf([v.p_h_vote for v in probs])
malicious = pbd_pmf([v.p_m_vote for v in probs])
print("honest mean votes", round(honest.mean(), 3), "malicious mean votes", round(malicious.mean(), 3))
print("honest pmf   ", np.round(honest.masses, 3))
print("malicious pmf", np.round(malicious.masses, 3))
