typedef long long ktime_t;
