#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "model.hpp"

namespace hawkes {

// Edge j -> i whenever an event in j can excite i. gamma/C are NaN off the APT edges.
struct HawkesGraph {
    std::size_t d = 0;
    Matrix<char> edge;  // edge(i, j): target i, source j
    Matrix<double> gamma;
    Matrix<double> C;

    std::vector<std::pair<std::size_t, std::size_t>> edges() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                if (edge(i, j)) out.emplace_back(i, j);
        return out;
    }
};

struct ClassDecomposition {
    std::vector<std::vector<std::size_t>> classes;  // members sorted ascending
    std::vector<char> recurrent;
    std::vector<std::size_t> class_of;
    std::vector<std::size_t> topological_order;  // class ids, upstream classes first
};

inline HawkesGraph build_graph(const HawkesModel& m) {
    HawkesGraph g;
    g.d = m.d;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    g.edge = Matrix<char>(m.d, m.d, 0);
    g.gamma = Matrix<double>(m.d, m.d, nan);
    g.C = Matrix<double>(m.d, m.d, nan);
    for (std::size_t i = 0; i < m.d; ++i)
        for (std::size_t j = 0; j < m.d; ++j) {
            if (!m.active(i, j)) continue;
            g.edge(i, j) = 1;
            if (auto p = std::get_if<ParetoJump>(&m.jumps(i, j))) {
                g.gamma(i, j) = p->gamma;
                g.C(i, j) = p->C;
            }
        }
    return g;
}

// Tarjan's algorithm; SCCs come out sinks first, so reversing gives upstream first.
inline ClassDecomposition classify(const HawkesGraph& g) {
    const std::size_t d = g.d;
    const std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> index(d, none), low(d, 0), stack;
    std::vector<char> on_stack(d, 0);
    std::vector<std::vector<std::size_t>> found;
    std::size_t counter = 0;
    std::function<void(std::size_t)> visit = [&](std::size_t v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = 1;
        for (std::size_t w = 0; w < d; ++w) {
            if (!g.edge(w, v)) continue;
            if (index[w] == none) {
                visit(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::vector<std::size_t> comp;
            std::size_t w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = 0;
                comp.push_back(w);
            } while (w != v);
            std::sort(comp.begin(), comp.end());
            found.push_back(std::move(comp));
        }
    };
    for (std::size_t v = 0; v < d; ++v)
        if (index[v] == none) visit(v);

    ClassDecomposition cd;
    // Number classes by their smallest member for a stable presentation.
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    cd.classes = found;
    cd.class_of.assign(d, 0);
    for (std::size_t c = 0; c < found.size(); ++c)
        for (std::size_t v : found[c]) cd.class_of[v] = c;
    cd.recurrent.assign(found.size(), 1);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if (g.edge(i, j) && cd.class_of[i] != cd.class_of[j]) cd.recurrent[cd.class_of[j]] = 0;

    // Kahn's algorithm on the condensation, smallest class id first among ready classes.
    std::size_t nc = found.size();
    std::vector<std::vector<char>> cedge(nc, std::vector<char>(nc, 0));
    std::vector<std::size_t> indeg(nc, 0);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            std::size_t a = cd.class_of[j], b = cd.class_of[i];
            if (g.edge(i, j) && a != b && !cedge[a][b]) {
                cedge[a][b] = 1;
                ++indeg[b];
            }
        }
    std::vector<char> done(nc, 0);
    for (std::size_t step = 0; step < nc; ++step) {
        std::size_t pick = 0;
        while (done[pick] || indeg[pick] != 0) ++pick;
        done[pick] = 1;
        cd.topological_order.push_back(pick);
        for (std::size_t b = 0; b < nc; ++b)
            if (cedge[pick][b]) --indeg[b];
    }
    return cd;
}

// reach(i, j) = 1 iff a directed path of length >= 1 leads from j to i.
inline Matrix<char> reachability(const HawkesGraph& g) {
    const std::size_t d = g.d;
    Matrix<char> r(d, d, 0);
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<std::size_t> frontier;
        for (std::size_t i = 0; i < d; ++i)
            if (g.edge(i, j) && !r(i, j)) {
                r(i, j) = 1;
                frontier.push_back(i);
            }
        while (!frontier.empty()) {
            std::size_t v = frontier.back();
            frontier.pop_back();
            for (std::size_t w = 0; w < d; ++w)
                if (g.edge(w, v) && !r(w, j)) {
                    r(w, j) = 1;
                    frontier.push_back(w);
                }
        }
    }
    return r;
}

inline bool is_irreducible(const HawkesGraph& g) { return classify(g).classes.size() == 1; }

}  // namespace hawkes
