#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "gsurgery/graph.hpp"

namespace gsurgery {

/// Parsed graph file. `dag` is set when the file declared latent vertices;
/// `graph` is then its latent projection.
struct GraphFile {
    Admg graph;
    std::optional<CausalDag> dag;
    std::optional<std::string> target;
};

/// Line format ('#' starts a comment):
///   obs A | lat U | A -> B | A <-> B | S sel -> A | target T
GraphFile parse_graph(std::string_view text);
GraphFile load_graph(const std::string& path);

/// Writes `g` back in the same line format (ADMG form).
std::string format_graph(const Admg& g, const std::optional<std::string>& target = std::nullopt);

}  // namespace gsurgery
