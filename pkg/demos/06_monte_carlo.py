"""
Is the bound reachable?
=======================

Draw noisy measurement vectors at a few well-covered positions, estimate
the position by maximum likelihood and compare the empirical RMSE with the
bound.
"""

from mdfl.experiments import high_information_positions, run_monte_carlo_validation
from mdfl.scenario import make_paper_room

room = make_paper_room()
positions = high_information_positions(room, n=4)
for res in run_monte_carlo_validation(room, positions, trials=300, seed=0):
    x, y = res.position
    print(
        f"({x:6.2f}, {y:6.2f})  empirical {100 * res.empirical_rmse:5.2f} cm "
        f"+- {100 * res.std_error:4.2f}  bound {100 * res.bound:5.2f} cm"
    )

# The estimator stays at or slightly above the bound, up to Monte-Carlo
# sampling error; at these positions the maximum-likelihood estimate is
# nearly efficient.
