#include "amd/scale.hpp"

#include <algorithm>
#include <stdexcept>

namespace amd {

int eye_risk_factors(const EyeFeatures& eye) {
    int n = 0;
    if (eye.drusen == DrusenClass::Large) ++n;
    if (eye.pigment) ++n;
    return n;
}

SeverityScore simplified_score(const EyeFeatures& left, const EyeFeatures& right) {
    if (left.late_amd || right.late_amd) return SeverityScore{5};

    int score = eye_risk_factors(left) + eye_risk_factors(right);
    bool any_large = left.drusen == DrusenClass::Large || right.drusen == DrusenClass::Large;
    bool both_medium = left.drusen == DrusenClass::Medium && right.drusen == DrusenClass::Medium;
    if (!any_large && both_medium) ++score;
    return SeverityScore{std::min(score, 4)};
}

double five_year_risk(int score) {
    static constexpr double table[5] = {0.4, 3.1, 11.8, 25.9, 47.3};
    if (score < 0 || score > 4)
        throw std::domain_error("five_year_risk: score " + std::to_string(score) +
                                " outside 0-4");
    return table[score];
}

const char* drusen_name(DrusenClass c) {
    switch (c) {
        case DrusenClass::SmallNone: return "small_none";
        case DrusenClass::Medium: return "medium";
        case DrusenClass::Large: return "large";
    }
    return "?";
}

}  // namespace amd
