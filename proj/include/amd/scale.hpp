#pragma once

#include <string>

namespace amd {

// Per-eye drusen size category. Ordering matters: SmallNone < Medium < Large.
enum class DrusenClass { SmallNone = 0, Medium = 1, Large = 2 };

// Risk-factor state of one eye as graded from a fundus photograph.
struct EyeFeatures {
    DrusenClass drusen = DrusenClass::SmallNone;
    bool pigment = false;
    bool late_amd = false;

    bool operator==(const EyeFeatures&) const = default;
};

// Patient-level severity on the simplified scale. 0-4 from bilateral risk
// factors; 5 reserved for late AMD in either eye.
struct SeverityScore {
    int value = 0;

    bool operator==(const SeverityScore&) const = default;
};

// Number of risk factors one eye contributes: large drusen and pigmentary
// abnormalities count one each. The late-AMD flag is handled at patient level.
int eye_risk_factors(const EyeFeatures& eye);

// Bilateral score. Late AMD in either eye scores 5. Otherwise the per-eye
// factor counts are summed, plus one if both eyes have medium drusen and
// neither has large drusen, capped at 4.
SeverityScore simplified_score(const EyeFeatures& left, const EyeFeatures& right);

// Five-year risk of progression to late AMD, in percent, for scores 0-4.
// Throws std::domain_error outside that range (risk is undefined once late
// AMD is present).
double five_year_risk(int score);

const char* drusen_name(DrusenClass c);

}  // namespace amd
