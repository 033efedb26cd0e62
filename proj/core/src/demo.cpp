#include "dmg/demo.hpp"

#include "dmg/errors.hpp"

namespace dmg {

void Demonstration::validate(const TaskSpec& spec) const {
  if (!(dt > 0.0)) throw SpecError("demonstration: dt must be positive");
  if (steps.size() < 3) {
    throw TooShortError("demonstration has " + std::to_string(steps.size()) +
                        " steps; at least 3 are required");
  }
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (steps[k].object_poses.size() != spec.objects.size()) {
      throw SpecError("demonstration step " + std::to_string(k) +
                      ": object count does not match the task spec");
    }
    for (const auto& [name, geom] : spec.objects) {
      if (!steps[k].object_poses.count(name)) {
        throw SpecError("demonstration step " + std::to_string(k) +
                        ": missing object \"" + name + "\"");
      }
    }
  }
}

}  // namespace dmg
