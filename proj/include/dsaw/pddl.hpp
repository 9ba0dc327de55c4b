#pragma once

#include <string>
#include <string_view>

#include "dsaw/planner.hpp"

namespace dsaw {

struct PddlText {
    std::string domain;
    std::string problem;
};

/// STRIPS with :negative-preconditions and :action-costs. A non-empty action
/// label is kept in a ";; label: <word>" comment line before the action.
PddlText emit_pddl(const StripsTask& task, std::string_view domain_name = "paraphrase",
                   std::string_view problem_name = "task");

/// Inverse of emit_pddl. Throws ParseError with line/column on anything
/// outside the subset.
StripsTask parse_pddl(std::string_view domain, std::string_view problem);

}  // namespace dsaw
