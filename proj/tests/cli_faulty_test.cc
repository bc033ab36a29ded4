//
// Copyright 2026 The Gausstimate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Linked against the CLI built with a truthful rr1 law.

#include <sstream>
#include <string>

#include "gausstimate/cli.h"
#include "gtest/gtest.h"

namespace gausstimate {
namespace {

TEST(FaultyAuditTest, AuditDetectsTruthfulRr1) {
  std::ostringstream out, err;
  EXPECT_EQ(RunCli({"audit"}, out, err), kExitFailure);
  EXPECT_NE(out.str().find("audit rr1 eps=1 max_ratio=inf"),
            std::string::npos)
      << out.str();
  EXPECT_NE(err.str().find("violation: rr1"), std::string::npos);
  // The other randomizers are unaffected.
  EXPECT_NE(out.str().find("audit kv_rr2 eps=1 max_ratio="),
            std::string::npos);
}

}  // namespace
}  // namespace gausstimate
