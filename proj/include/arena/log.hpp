#pragma once

#include <iostream>
#include <mutex>
#include <sstream>
#include <string>

namespace arena {

// Minimal leveled logger writing to a redirectable stream (std::clog by
// default). Tests swap the sink to capture output.
class Log {
public:
    static std::ostream*& sink() {
        static std::ostream* s = &std::clog;
        return s;
    }

    template <typename... Args>
    static void info(Args&&... args) { write("INFO", std::forward<Args>(args)...); }

    template <typename... Args>
    static void warn(Args&&... args) { write("WARN", std::forward<Args>(args)...); }

private:
    template <typename... Args>
    static void write(const char* level, Args&&... args) {
        std::ostringstream line;
        line << "[" << level << "] ";
        (line << ... << args);
        line << '\n';
        static std::mutex mu;
        std::lock_guard<std::mutex> lock(mu);
        (*sink()) << line.str();
    }
};

}  // namespace arena
