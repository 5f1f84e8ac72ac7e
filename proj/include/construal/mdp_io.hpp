#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "construal/mdp.hpp"

namespace construal {

// Textual MDP format, one directive per line:
//
//   mdp <state_count> <discount>
//   name <id>
//   label <s> <text>
//   tag <s> <text>
//   aname <action_id> <text>
//   start <s> <weight>
//   r <s> <action_id> <reward>
//   t <s> <action_id> <s'> <prob>
//   terminal <s>
//
// '#' starts a comment. The file is rejected unless every available pair has
// an `r` line and a distribution summing to 1 within 1e-9.
GroundMdp parse_mdp(std::string_view text);
std::string write_mdp(const GroundMdp& mdp);

GroundMdp read_mdp_file(const std::filesystem::path& path);
void write_mdp_file(const std::filesystem::path& path, const GroundMdp& mdp);

// Policy: `policy <state_count> <deterministic|stochastic>` then one
// `p <s> <action_id> <prob>` line per choice.
Policy parse_policy(std::string_view text);
std::string write_policy(const Policy& policy);

// Values: `values <state_count> <mdp name>` then one `v <s> <value>` line per
// state.
ValueFunction parse_values(std::string_view text);
std::string write_values(const ValueFunction& values);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

namespace detail {
// Calls fn(line_no, tokens, line) for every non-blank line with comments
// removed.
void for_each_directive(std::string_view text,
                        const std::function<void(std::size_t, const std::vector<std::string_view>&, std::string_view)>& fn);
std::vector<std::string_view> split_ws(std::string_view line);
std::string_view strip_comment(std::string_view line);
std::string_view rest_after(std::string_view line, std::size_t tokens);
std::size_t parse_index(std::string_view tok, std::size_t line);
double parse_real(std::string_view tok, std::size_t line);
std::string slurp(const std::filesystem::path& path);
void spit(const std::filesystem::path& path, const std::string& text);
}  // namespace detail

}  // namespace construal
