#pragma once

#include "deepsense/errors.hpp"
#include "deepsense/rng.hpp"

#include <cstring>
#include <functional>
#include <string>

namespace deepsense::testkit {

/// One random corruption of `bytes`: bit flips, a truncation, a header field
/// overwritten with an extreme value, inserted or appended garbage.
inline std::string mutate(const std::string& bytes, RngStream& rng) {
    std::string s = bytes;
    auto pick = [&](std::size_t n) { return n == 0 ? std::size_t{0} : static_cast<std::size_t>(rng() % n); };
    switch (rng() % 6) {
        case 0: {
            const std::size_t flips = 1 + pick(8);
            for (std::size_t i = 0; i < flips && !s.empty(); ++i) s[pick(s.size())] ^= static_cast<char>(1u << pick(8));
            break;
        }
        case 1:
            s.resize(pick(s.size()));
            break;
        case 2: {
            // Header fields live in the first few dozen bytes.
            static const std::uint32_t extremes[] = {0u, 1u, 0x7fffffffu, 0xffffffffu, 0x80000000u, 65536u};
            const std::uint32_t v = extremes[pick(6)];
            const std::size_t at = pick(std::min<std::size_t>(s.size(), 40));
            for (std::size_t k = 0; k < 4 && at + k < s.size(); ++k) s[at + k] = static_cast<char>((v >> (8 * k)) & 0xff);
            break;
        }
        case 3: {
            const std::size_t at = pick(s.size() + 1);
            std::string junk(1 + pick(16), '\0');
            for (auto& c : junk) c = static_cast<char>(rng());
            s.insert(at, junk);
            break;
        }
        case 4:
            s += std::string(1 + pick(32), static_cast<char>(rng()));
            break;
        default: {
            // Overwrite a random 8-byte window, hitting payload floats as NaN/inf.
            if (s.size() >= 8) {
                const std::size_t at = pick(s.size() - 7);
                const std::uint64_t v = rng();
                std::memcpy(&s[at], &v, 8);
            }
            break;
        }
    }
    return s;
}

struct FuzzOutcome {
    std::size_t accepted = 0;
    std::size_t format_errors = 0;
    std::size_t other_errors = 0;  // anything but FormatError is a contract violation
    std::string first_other;
};

/// Feeds `count` mutations of `bytes` to `decode`. A crash would abort the
/// process; here every input must either decode or raise FormatError.
inline FuzzOutcome fuzz_decoder(const std::string& bytes, std::size_t count, std::uint64_t seed,
                                const std::function<void(const std::string&)>& decode) {
    FuzzOutcome out;
    RngStream rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::string m = mutate(bytes, rng);
        try {
            decode(m);
            ++out.accepted;
        } catch (const FormatError&) {
            ++out.format_errors;
        } catch (const std::exception& e) {
            if (out.other_errors++ == 0) out.first_other = e.what();
        }
    }
    return out;
}

}  // namespace deepsense::testkit
