#include "cagan/objectives.hpp"

#include <nlohmann/json.hpp>

namespace cagan {

void LossWeights::validate() const {
  if (!std::isfinite(gamma_i) || gamma_i < 0) throw ValidationError("gamma_i must be finite and non-negative");
  if (!std::isfinite(gamma_c) || gamma_c < 0) throw ValidationError("gamma_c must be finite and non-negative");
}

LossReport total_losses(const LossComponents& c, const LossWeights& w) {
  w.validate();
  const std::pair<const char*, double> terms[] = {
      {"d_real", c.d_real}, {"d_fake", c.d_fake}, {"d_mismatch", c.d_mismatch},
      {"g_adv", c.g_adv},   {"l_id", c.l_id},     {"l_cyc", c.l_cyc},
  };
  for (const auto& [name, value] : terms) {
    if (!std::isfinite(value)) throw NumericalError(std::string("non-finite loss term ") + name);
  }
  LossReport r;
  r.d_real = c.d_real;
  r.d_fake = c.d_fake;
  r.d_mismatch = c.d_mismatch;
  r.g_adv = c.g_adv;
  r.l_id = c.l_id;
  r.l_cyc = c.l_cyc;
  r.g_total = c.g_adv + w.gamma_i * c.l_id + w.gamma_c * c.l_cyc;
  r.d_total = c.d_real + c.d_fake + c.d_mismatch;
  if (!std::isfinite(r.g_total)) throw NumericalError("non-finite loss term g_total");
  if (!std::isfinite(r.d_total)) throw NumericalError("non-finite loss term d_total");
  return r;
}

void to_json(nlohmann::json& j, const LossReport& r) {
  j = nlohmann::json{{"d_real", r.d_real}, {"d_fake", r.d_fake}, {"d_mismatch", r.d_mismatch},
                     {"g_adv", r.g_adv},   {"l_id", r.l_id},     {"l_cyc", r.l_cyc},
                     {"g_total", r.g_total}, {"d_total", r.d_total}};
}

void from_json(const nlohmann::json& j, LossReport& r) {
  j.at("d_real").get_to(r.d_real);
  j.at("d_fake").get_to(r.d_fake);
  j.at("d_mismatch").get_to(r.d_mismatch);
  j.at("g_adv").get_to(r.g_adv);
  j.at("l_id").get_to(r.l_id);
  j.at("l_cyc").get_to(r.l_cyc);
  j.at("g_total").get_to(r.g_total);
  j.at("d_total").get_to(r.d_total);
}

}  // namespace cagan
