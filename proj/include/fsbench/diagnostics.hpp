#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace fsbench {

// Non-fatal conditions (degenerate inputs, growth caps, skipped classes) are
// reported through a process-wide sink. The default sink writes to stderr.
using WarningSink = std::function<void(std::string_view)>;

void warn(std::string_view message);

// Returns the previous sink.
WarningSink set_warning_sink(WarningSink sink);

// Captures warnings for the lifetime of the object (tests, report assembly).
class ScopedWarningCapture {
public:
    ScopedWarningCapture();
    ~ScopedWarningCapture();
    ScopedWarningCapture(const ScopedWarningCapture&) = delete;
    ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

    const std::vector<std::string>& messages() const { return messages_; }

private:
    std::vector<std::string> messages_;
    WarningSink previous_;
};

}  // namespace fsbench
