/*
 * Copyright (C) 2026 The uvsync Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef UVSYNC_VALIDATE_HPP
#define UVSYNC_VALIDATE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace uvsync {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// Fast invariant checks over the core operators plus a small end-to-end
/// oracle run. Exceptions inside a check are reported as failures.
std::vector<CheckResult> run_self_checks(uint64_t seed = 1);

} // namespace uvsync

#endif // UVSYNC_VALIDATE_HPP
