"""Exact computation with geodesic currents, Stallings subgroup graphs and
simplicial very small trees over a finitely generated free group."""

from .words import (Basis, CyclicWord, ReducedWord, cyclic_reduce,
                    enumerate_cyclic_words, free_reduce, occurrences,
                    parse_cyclic, parse_word, sample_reduced_word)
from .automorphisms import (Automorphism, OuterKey, apply,
                            cancellation_constants, compose, invert, is_inner,
                            outer_ball, outer_key, parse_automorphism,
                            whitehead_generators)
from .stallings import (StallingsGraph, SubgroupChart, conjugacy_intersection,
                        fold, intersect, is_malnormal, member,
                        readable_in_core, subgroup_chart)
from .currents import (FrequencyTable, RationalCurrent, counting_table,
                       monte_carlo_stretch, realize_table, restrict,
                       stretching_factor, support_at_depth, uniform_table,
                       validate)
from .trees import (MarkedMetricGraph, Splitting, bass_serre_length,
                    bbt_bounds, free_product_splitting, hnn_splitting,
                    intersection_number, l2_contains, supp_subset_l2,
                    translation_length)
from .experiments import (ExperimentReport, bilipschitz_scan, bte_bounds,
                          filling_search, length_spectrum, main_theorem_check,
                          main_theorem_sweep, north_south, sample_marked_roses,
                          seed_splittings, transverse)

__version__ = "0.1.0"
