#include "skorolab/parallel.hpp"

#include <atomic>
#include <cstdlib>

namespace skorolab {

namespace {
std::atomic<int> g_threads{0};

int env_thread_count() {
    if (const char* env = std::getenv("SKOROLAB_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}
}  // namespace

int default_thread_count() {
    int n = g_threads.load();
    if (n >= 1) return n;
    n = env_thread_count();
    g_threads.store(n);
    return n;
}

void set_default_thread_count(int n) { g_threads.store(n >= 1 ? n : 1); }

}  // namespace skorolab
