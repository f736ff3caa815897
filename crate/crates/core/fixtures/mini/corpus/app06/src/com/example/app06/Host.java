package com.example.app06;

public class Host {
    private int counter;

    public void onCreate() {
        counter = counter + 6;
        String title = "screen 6";
        System.out.println(title);
    }

    public void configure() {
        TrustManager[] trustAll = new TrustManager[] { new X509TrustManager() {
            public void checkClientTrusted(X509Certificate[] certs, String authType) { }
            public void checkServerTrusted(X509Certificate[] certs, String authType) { }
            public X509Certificate[] getAcceptedIssuers() { return new X509Certificate[0]; }
        } };
        SSLContext sc = SSLContext.getInstance("TLSv1.2");
        sc.init(null, trustAll, new SecureRandom());
        HttpsURLConnection.setDefaultSSLSocketFactory(sc.getSocketFactory());
    }

    public int compute(int a, int b) {
        int s = a * 8 + b;
        return s;
    }
}
