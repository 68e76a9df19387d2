#pragma once

#include <array>
#include <vector>

#include "ordcausal/core.hpp"

namespace ordcausal {

/// 1994 General Social Survey extract: educational outcomes of 835 male
/// respondents aged 25-60 and in the workforce; treatment is "at least one
/// parent attained a college degree or higher".  Counts per category:
///   control  (79, 378, 52, 112, 49)   n0 = 670
///   treated  ( 2,  46, 11,  65, 41)   n1 = 165
inline const std::array<int, 5>& gss_control_counts() {
    static const std::array<int, 5> c{79, 378, 52, 112, 49};
    return c;
}

inline const std::array<int, 5>& gss_treated_counts() {
    static const std::array<int, 5> c{2, 46, 11, 65, 41};
    return c;
}

inline ObservedStudy gss_dataset() {
    std::vector<ObservedStudy::Unit> units;
    units.reserve(835);
    for (int cat = 1; cat <= 5; ++cat)
        for (int r = 0; r < gss_control_counts()[static_cast<std::size_t>(cat - 1)]; ++r)
            units.push_back({Category(cat), 0, {}});
    for (int cat = 1; cat <= 5; ++cat)
        for (int r = 0; r < gss_treated_counts()[static_cast<std::size_t>(cat - 1)]; ++r)
            units.push_back({Category(cat), 1, {}});
    return ObservedStudy(5, std::move(units),
                         CategoryLabels({"<HS", "HS", "AS", "BA", "GRAD"}));
}

} // namespace ordcausal
