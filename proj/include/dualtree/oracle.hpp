#pragma once

#include "dualtree/core.hpp"
#include "dualtree/emst.hpp"
#include "dualtree/kde.hpp"
#include "dualtree/neighbor.hpp"
#include "dualtree/rangesearch.hpp"

namespace dualtree {

// Exhaustive ground truth for every task. None of these touch the space-tree
// code paths; they share only the candidate containers and tie rules so that
// results are comparable identity-for-identity, not just value-for-value.

NeighborResults brute_knn(const Dataset& query, const Dataset& reference,
                          NeighborMode mode, std::uint32_t k, bool exclude_self);

RangeResults brute_range(const Dataset& query, const Dataset& reference,
                         const RangeSpec& spec);

// Kruskal over all implicit pairwise edges, ties by (weight, u, v).
EmstResult kruskal_mst(const Dataset& data);

std::vector<double> brute_kde(const Dataset& query, const Dataset& reference,
                              const Kernel& kernel);

}  // namespace dualtree
