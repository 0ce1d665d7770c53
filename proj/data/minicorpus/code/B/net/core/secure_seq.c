#include <linux/types.h>
#include <linux/ktime.h>
#include <net/tcp.h>

static u32 net_secret[4] __read_mostly;
static u64 net_secret_birth;
static bool net_secret_ready;

extern void get_random_bytes(void *buf, int len);
extern u64 ktime_get_ns(void);
extern u32 siphash_4u32(u32 a, u32 b, u32 c, u32 d, const u32 *key);

/* Fill the secret key with fresh random bits. */
static void net_secret_init(void)
{
	get_random_bytes(net_secret, sizeof(net_secret));
	net_secret_birth = ktime_get_ns();
}

/* The 4 microsecond clock M of the ISN formula. */
static u32 seq_scale(u32 seq)
{
	return seq + (u32)(ktime_get_ns() >> 6);
}

u32 secure_tcp_seq(__be32 saddr, __be32 daddr, __be16 sport, __be16 dport)
{
	u32 hash;

	if (!net_secret_ready) {
		net_secret_init();
		net_secret_ready = true;
	}
	hash = siphash_4u32(saddr, daddr, ((u32)sport << 16) | dport, 0, net_secret);
	return seq_scale(hash);
}
